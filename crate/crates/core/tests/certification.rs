use std::sync::Arc;

use accelopt::certificates::{increases, CertificateReport, Tolerance};
use accelopt::gladmm::{gladmm_run, GladmmConfig};
use accelopt::glalm::{glalm_run, GlalmConfig};
use accelopt::gpgm::gpgm_run;
use accelopt::linalg::DenseMatrix;
use accelopt::problems::{
    gen_cs_tv, gen_qp, reference_composite, reference_constrained, reference_two_block, CompositeProblem,
    LinConstrainedProblem, Quadratic, ReferenceConfig,
};
use accelopt::prox::{L1Norm, LowerBound, ProxOracle, Zero};
use accelopt::schedules::{validate_gladmm, GladmmSchedule, GpgmParams};
use accelopt::stopping::StoppingRule;
use accelopt::subproblem::InnerConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_composite(seed: u64) -> CompositeProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=50);
    let mut m = DenseMatrix::zeros(n, n);
    for v in m.data_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    let mut q = m.gram();
    for i in 0..n {
        q.set(i, i, q.get(i, i) + 0.01);
    }
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g: Arc<dyn ProxOracle> = match seed % 3 {
        0 => Arc::new(Zero),
        1 => Arc::new(L1Norm::new(0.3).unwrap()),
        _ => Arc::new(LowerBound::nonneg()),
    };
    CompositeProblem::new(Arc::new(Quadratic::new(q, c).unwrap()), g)
}

#[test]
fn gpgm_bound_holds_on_random_composites() {
    for seed in 0..20u64 {
        let p = random_composite(seed);
        let r = reference_composite(&p, &ReferenceConfig::default()).unwrap();
        let alpha = [0.5, 0.8, 1.0][(seed % 3) as usize];
        let params = GpgmParams::new(p.f.lipschitz(), alpha).unwrap();
        let x1 = vec![1.0; p.dim()];
        let run = gpgm_run(&p, &params, &x1, &StoppingRule::MaxIters(500), Some(&r)).unwrap();
        let tol = Tolerance::new(1e-8 * r.f_star.abs().max(1.0), 0.0);
        let rep = CertificateReport::from_pairs(
            run.records.iter().map(|rec| (rec.k, rec.obj_gap.unwrap(), rec.bound.unwrap())),
            tol,
        );
        assert!(rep.is_clean(), "seed {seed}: {:?}", rep.violations().next());
        let mut lyap = vec![run.lyapunov_initial.unwrap()];
        lyap.extend(run.records.iter().map(|rec| rec.lyapunov.unwrap()));
        let scale = 1e-9 * lyap[0].max(1.0);
        assert!(increases(&lyap, scale).is_empty(), "seed {seed}: Lyapunov increased");
    }
}

fn tiny_qp() -> LinConstrainedProblem {
    let f = Quadratic::new(DenseMatrix::identity(2), vec![-1.0, -1.0]).unwrap();
    LinConstrainedProblem::new(
        Arc::new(f),
        Arc::new(LowerBound::nonneg()),
        Arc::new(DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap()),
        vec![1.0],
    )
    .unwrap()
}

fn certify_glalm(p: &LinConstrainedProblem, cfg: &GlalmConfig, label: &str) {
    let r = reference_constrained(p, &ReferenceConfig::default()).unwrap();
    let x1 = vec![0.0; p.dim()];
    let run = glalm_run(p, cfg, &x1, &StoppingRule::MaxIters(1000), Some(&r)).unwrap();
    let tol = Tolerance::new(1e-6, 1e-8);
    let gap = CertificateReport::from_pairs(
        run.records.iter().map(|rec| (rec.k, rec.obj_gap.unwrap().abs(), rec.bound.unwrap())),
        tol,
    );
    let feas = CertificateReport::from_pairs(
        run.records.iter().map(|rec| (rec.k, rec.feas, rec.bound.unwrap())),
        tol,
    );
    assert!(gap.is_clean(), "{label}: objective {:?}", gap.violations().next());
    assert!(feas.is_clean(), "{label}: feasibility {:?}", feas.violations().next());
}

#[test]
fn glalm_bound_holds_on_tiny_qp() {
    let p = tiny_qp();
    let r = reference_constrained(&p, &ReferenceConfig::default()).unwrap();
    assert!((r.x[0] - 0.5).abs() < 1e-8 && (r.x[1] - 0.5).abs() < 1e-8);
    assert!((r.f_star + 0.75).abs() < 1e-10);
    let cfg = GlalmConfig::new(p.f.lipschitz(), 0.5, 1.5, 1.0, None, InnerConfig::default()).unwrap();
    certify_glalm(&p, &cfg, "tiny QP");
}

#[test]
fn glalm_bound_holds_on_desk_qps() {
    for seed in 0..10u64 {
        let inst = gen_qp(20, 200, seed).unwrap();
        let p = &inst.problem;
        let cfg = GlalmConfig::new(p.f.lipschitz(), 0.5, 1.5, 15.0 * 20.0, None, InnerConfig::default()).unwrap();
        certify_glalm(p, &cfg, &format!("seed {seed}"));
    }
}

#[test]
fn gladmm_bound_holds_on_desk_cs() {
    let inst = gen_cs_tv(16, 0.3, 1e-3, 1e-3, 0).unwrap();
    let p = &inst.problem;
    let r = reference_two_block(p, &ReferenceConfig::default()).unwrap();
    let n = 300;
    let op_norm = 8f64.sqrt();
    let schedule =
        GladmmSchedule::with_default_beta(n, 0.8, 1.5, 1.0 / op_norm, 1.5, p.f.lipschitz()).unwrap();
    assert!(validate_gladmm(&schedule, schedule.beta).is_empty());
    let x1 = vec![0.0; p.x_dim()];
    let y1 = vec![0.0; p.y_dim()];
    let run = gladmm_run(p, &GladmmConfig::new(schedule), &x1, &y1, Some(&r), Some(&inst.x_true)).unwrap();
    let rec = run.certified_record().unwrap();
    let bound = rec.bound.unwrap();
    assert!(rec.obj_gap.unwrap().abs() <= bound + 1e-5, "gap {} bound {bound}", rec.obj_gap.unwrap());
    assert!(rec.feas <= bound + 1e-5, "feas {} bound {bound}", rec.feas);
    for r in &run.records {
        let m = r.obj_gap.unwrap().abs().max(r.feas);
        assert!(m <= r.bound.unwrap() + 1e-5, "k {}: {m} > {}", r.k, r.bound.unwrap());
        assert!(r.multiplier_residual.unwrap() <= 1e-12, "k {}: {}", r.k, r.multiplier_residual.unwrap());
    }
}
