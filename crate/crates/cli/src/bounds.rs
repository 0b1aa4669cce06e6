//! `bounds`: compares the right-hand sides of the telescoped Lyapunov
//! inequalities for `α < 1` against the `α = 1` baseline.
//!
//! For the composite experiment the compared quantity is
//! `γ/(2(2−α))(‖x̂¹−x*‖² − ‖x̂^{k+1}−x*‖²)`, the bound on `t_k²(F(x_ag^{k+1}) − F*)`.
//! For the QP experiment it is
//! `η/(2−α)(‖x̂¹−x*‖² − ‖x̂^{k+1}−x*‖²) + (‖ẑ¹−z*‖² − ‖ẑ^{k+1}−z*‖²)/(κγ)`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use accelopt::certificates::{glalm_bound_numerator, gpgm_bound_numerator};
use accelopt::glalm::{glalm_step, GlalmConfig, GlalmState, GlalmWorkspace};
use accelopt::gpgm::gpgm_run;
use accelopt::linalg::dist_sq;
use accelopt::problems::{QpInstance, Reference};
use accelopt::schedules::GpgmParams;
use accelopt::stopping::StoppingRule;
use accelopt::subproblem::InnerConfig;
use anyhow::{anyhow, bail, Result};

use crate::artifacts;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::experiment::{build_instance, compute_reference, Instance};

pub const HEADER: &str = "k,bound_alpha,bound_ref";

/// One `α` (and `κ`) sweep entry.
#[derive(Clone, Debug)]
pub struct BoundSeries {
    pub alpha: f64,
    pub kappa: Option<f64>,
    pub k: Vec<usize>,
    pub bound_alpha: Vec<f64>,
    pub bound_ref: Vec<f64>,
    pub path: PathBuf,
}

impl BoundSeries {
    /// Iterations where `bound_alpha ≤ bound_ref` fails.
    pub fn failures(&self) -> Vec<usize> {
        self.k
            .iter()
            .zip(self.bound_alpha.iter().zip(&self.bound_ref))
            .filter(|(_, (a, r))| !(a <= r))
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn holds(&self) -> bool {
        self.failures().is_empty()
    }

    fn name(&self) -> String {
        match self.kappa {
            Some(kappa) => format!("alpha={} kappa={}", self.alpha, kappa),
            None => format!("alpha={}", self.alpha),
        }
    }
}

fn ranges(ks: &[usize]) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < ks.len() {
        let start = ks[i];
        let mut end = start;
        while i + 1 < ks.len() && ks[i + 1] == end + 1 {
            i += 1;
            end = ks[i];
        }
        out.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
        i += 1;
    }
    out.join(",")
}

fn write_series(s: &BoundSeries) -> Result<()> {
    let mut w = artifacts::create(&s.path)?;
    writeln!(w, "{HEADER}")?;
    for (k, (a, r)) in s.k.iter().zip(s.bound_alpha.iter().zip(&s.bound_ref)) {
        writeln!(w, "{k},{a},{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn composite_numerators(
    problem: &accelopt::problems::CompositeProblem,
    alpha: f64,
    reference: &Reference,
    iters: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let l = problem.f.lipschitz();
    let params = GpgmParams::new(l, alpha)?;
    let x1 = vec![0.0; problem.dim()];
    let d1 = dist_sq(&x1, &reference.x);
    let run = gpgm_run(problem, &params, &x1, &StoppingRule::MaxIters(iters), Some(reference))?;
    let mut ks = Vec::with_capacity(run.records.len());
    let mut vals = Vec::with_capacity(run.records.len());
    for r in &run.records {
        let dk = r.xhat_dist_sq.ok_or_else(|| anyhow!("missing x̂ distance"))?;
        ks.push(r.k);
        vals.push(gpgm_bound_numerator(params.gamma, params.alpha, d1, dk));
    }
    Ok((ks, vals))
}

fn qp_numerators(
    inst: &QpInstance,
    alpha: f64,
    kappa: f64,
    reference: &Reference,
    iters: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let problem = &inst.problem;
    let l = problem.f.lipschitz();
    let gamma = 15.0 * problem.b.len() as f64;
    let cfg = GlalmConfig::new(l, alpha, kappa, gamma, None, InnerConfig::default())?;
    let z_star = reference.z.as_deref().ok_or_else(|| anyhow!("reference has no multiplier"))?;
    let x1 = vec![0.0; problem.dim()];
    let mut state = GlalmState::new(x1.clone(), problem.b.len());
    let mut ws = GlalmWorkspace::new();
    let x0 = dist_sq(&x1, &reference.x);
    let z0 = dist_sq(&state.z_hat, z_star);
    let mut ks = Vec::with_capacity(iters);
    let mut vals = Vec::with_capacity(iters);
    for _ in 0..iters {
        let k = state.k;
        glalm_step(&mut state, problem, &cfg, &mut ws)?;
        let xk = dist_sq(&state.x_hat, &reference.x);
        let zk = dist_sq(&state.z_hat, z_star);
        ks.push(k);
        vals.push(glalm_bound_numerator(cfg.eta, alpha, kappa, gamma, (x0, xk), (z0, zk)));
    }
    Ok((ks, vals))
}

fn fmt_param(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

/// Runs the sweep and writes one CSV per entry plus `bounds_summary.txt`.
pub fn run_bounds(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<BoundSeries>> {
    fs::create_dir_all(dir)?;
    let inst = build_instance(cfg)?;
    let reference = compute_reference(&inst, cfg)?;
    let iters = cfg.bounds.iters;
    let mut series = Vec::new();
    match (&inst, cfg.kind) {
        (Instance::Logistic(i), ExperimentKind::Logistic) => {
            let (_, base) = composite_numerators(&i.problem, 1.0, &reference, iters)?;
            for &alpha in &cfg.bounds.alphas {
                let (k, vals) = composite_numerators(&i.problem, alpha, &reference, iters)?;
                series.push(BoundSeries {
                    alpha,
                    kappa: None,
                    bound_ref: base[..k.len()].to_vec(),
                    k,
                    bound_alpha: vals,
                    path: dir.join(format!("bounds_alpha{}.csv", fmt_param(alpha))),
                });
            }
        }
        (Instance::Qp(i), ExperimentKind::Qp) => {
            for &kappa in &cfg.bounds.kappas {
                let (_, base) = qp_numerators(i, 1.0, kappa, &reference, iters)?;
                for &alpha in &cfg.bounds.alphas {
                    let (k, vals) = qp_numerators(i, alpha, kappa, &reference, iters)?;
                    series.push(BoundSeries {
                        alpha,
                        kappa: Some(kappa),
                        bound_ref: base[..k.len()].to_vec(),
                        k,
                        bound_alpha: vals,
                        path: dir.join(format!("bounds_alpha{}_kappa{}.csv", fmt_param(alpha), fmt_param(kappa))),
                    });
                }
            }
        }
        _ => bail!("bound studies exist for the logistic and qp experiments only"),
    }
    let mut text = String::new();
    let _ = writeln!(text, "experiment {} seed {} iterations {iters}", cfg.kind, cfg.seed);
    for s in &series {
        write_series(s)?;
        let fails = s.failures();
        let _ = writeln!(
            text,
            "{}: bound_alpha <= bound_ref at {}/{} iterations{}",
            s.name(),
            s.k.len() - fails.len(),
            s.k.len(),
            if fails.is_empty() {
                String::new()
            } else {
                format!("; fails at k = {}", ranges(&fails))
            }
        );
    }
    fs::write(dir.join("bounds_summary.txt"), text)?;
    Ok(series)
}
