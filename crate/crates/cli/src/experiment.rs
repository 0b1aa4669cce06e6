//! `run`: instance generation, reference solve, solver runs and artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use accelopt::gladmm::{gladmm_run, ladmm_run, GladmmConfig, GladmmRecord, LadmmConfig};
use accelopt::glalm::{glalm_run, GlalmConfig};
use accelopt::gpgm::gpgm_run;
use accelopt::io::{save_pgm, save_vector, Meta};
use accelopt::linalg::{norm_sq, power_iteration};
use accelopt::problems::{
    gen_cs_tv, gen_logistic, gen_qp, reference_composite, reference_constrained, reference_two_block, CsInstance,
    LogisticInstance, QpInstance, Reference,
};
use accelopt::schedules::{GladmmSchedule, GpgmParams};
use accelopt::stopping::{StopReason, StoppingRule};
use accelopt::subproblem::InnerConfig;
use anyhow::{Context, Result};

use crate::artifacts;
use crate::certify::{self, LabelOutcome};
use crate::config::{ExperimentConfig, ExperimentKind, SolverName, SolverSpec};

pub enum Instance {
    Logistic(LogisticInstance),
    Qp(QpInstance),
    Cs(CsInstance),
}

pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let p = &cfg.instance;
    Ok(match cfg.kind {
        ExperimentKind::Logistic => Instance::Logistic(gen_logistic(p.m, p.n, p.s, p.lambda, cfg.seed)?),
        ExperimentKind::Qp => Instance::Qp(gen_qp(p.m, p.n, cfg.seed)?),
        ExperimentKind::CsTv => Instance::Cs(gen_cs_tv(p.size, p.ratio, p.sigma2, p.lambda, cfg.seed)?),
    })
}

pub fn compute_reference(inst: &Instance, cfg: &ExperimentConfig) -> Result<Reference> {
    let r = match inst {
        Instance::Logistic(i) => reference_composite(&i.problem, &cfg.reference)?,
        Instance::Qp(i) => reference_constrained(&i.problem, &cfg.reference)?,
        Instance::Cs(i) => reference_two_block(&i.problem, &cfg.reference)?,
    };
    Ok(r)
}

fn by_star_sq(inst: &Instance, r: &Reference) -> Option<f64> {
    match (inst, &r.y) {
        (Instance::Cs(i), Some(y)) => Some(norm_sq(&i.problem.b_op.apply(y))),
        _ => None,
    }
}

fn write_instance(dir: &Path, inst: &Instance, cfg: &ExperimentConfig) -> Result<()> {
    let idir = dir.join("instance");
    fs::create_dir_all(&idir)?;
    let mut meta = Meta::new();
    meta.set("kind", cfg.kind).set("seed", cfg.seed);
    match inst {
        Instance::Logistic(i) => {
            meta.set("m", i.loss.features().rows())
                .set("n", i.loss.features().cols())
                .set("s", i.support.len())
                .set("lambda", i.lambda);
            if cfg.save_instance {
                artifacts::save_matrix(&idir.join("features.txt"), i.loss.features())?;
                save_vector(&idir.join("labels.txt"), i.loss.labels())?;
                save_vector(&idir.join("x_true.txt"), &i.x_true)?;
            }
        }
        Instance::Qp(i) => {
            meta.set("m", i.problem.b.len()).set("n", i.problem.dim());
            if cfg.save_instance {
                artifacts::save_matrix(&idir.join("q.txt"), i.quadratic.q())?;
                save_vector(&idir.join("c.txt"), i.quadratic.c())?;
                artifacts::save_matrix(&idir.join("a.txt"), &i.a)?;
                save_vector(&idir.join("b.txt"), &i.problem.b)?;
            }
        }
        Instance::Cs(i) => {
            meta.set("size", i.size)
                .set("measurements", i.measurements)
                .set("ratio", cfg.instance.ratio)
                .set("sigma2", cfg.instance.sigma2)
                .set("lambda", i.lambda);
            if cfg.save_instance {
                artifacts::save_matrix(&idir.join("d.txt"), i.loss.matrix())?;
                save_vector(&idir.join("b.txt"), i.loss.data())?;
                save_vector(&idir.join("x_true.txt"), &i.x_true)?;
            }
            save_pgm(&idir.join("truth.pgm"), i.size, i.size, &i.x_true)?;
        }
    }
    meta.save(&idir.join("meta.txt"))?;
    Ok(())
}

fn stop_reason_str(r: StopReason) -> &'static str {
    match r {
        StopReason::MaxIters => "max_iters",
        StopReason::Stagnation => "stagnation",
        StopReason::DualGap => "dual_gap",
    }
}

/// Unique labels: a repeated solver name gets `_2`, `_3`, ...
pub fn labels(solvers: &[SolverSpec]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    solvers
        .iter()
        .map(|s| {
            let c = seen.entry(s.name.as_str()).or_insert(0);
            *c += 1;
            if *c == 1 {
                s.name.as_str().to_string()
            } else {
                format!("{}_{}", s.name.as_str(), c)
            }
        })
        .collect()
}

/// One finished solver run, for the summary.
#[derive(Clone, Debug)]
pub struct SolverSummary {
    pub label: String,
    pub iterations: usize,
    pub final_obj: f64,
    pub final_gap: Option<f64>,
    pub final_feas: Option<f64>,
    pub final_rel_err: Option<f64>,
    pub certificate: Option<LabelOutcome>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub f_star: f64,
    pub solvers: Vec<SolverSummary>,
}

impl RunSummary {
    pub fn solver(&self, label: &str) -> Option<&SolverSummary> {
        self.solvers.iter().find(|s| s.label == label)
    }

    pub fn violation_count(&self) -> usize {
        self.solvers
            .iter()
            .filter_map(|s| s.certificate.as_ref()?.report.as_ref())
            .map(|r| r.violation_count())
            .sum()
    }
}

fn logistic_stop(cfg: &ExperimentConfig, lambda: f64) -> StoppingRule {
    match cfg.tol {
        Some(tol) => StoppingRule::LogisticDualGap {
            tol,
            lambda,
            max_iters: cfg.max_iters,
        },
        None => StoppingRule::MaxIters(cfg.max_iters),
    }
}

fn qp_stop(cfg: &ExperimentConfig) -> StoppingRule {
    match cfg.tol {
        Some(tol) => StoppingRule::stagnation(tol, cfg.max_iters),
        None => StoppingRule::MaxIters(cfg.max_iters),
    }
}

fn run_logistic(
    dir: &Path,
    inst: &LogisticInstance,
    spec: &SolverSpec,
    label: &str,
    reference: &Reference,
    cfg: &ExperimentConfig,
) -> Result<SolverSummary> {
    let l = inst.problem.f.lipschitz();
    let params = match spec.name {
        SolverName::Gpgm => {
            let alpha = spec.get("alpha").unwrap_or(0.8);
            GpgmParams::with_gamma(l, alpha, spec.get("gamma").unwrap_or(l / alpha))?
        }
        _ => GpgmParams::with_gamma(l, 1.0, l)?,
    };
    let x1 = vec![0.0; inst.problem.dim()];
    let run = gpgm_run(&inst.problem, &params, &x1, &logistic_stop(cfg, inst.lambda), Some(reference))?;
    let mut meta = Meta::new();
    meta.set("solver", spec.name.as_str())
        .set("alpha", params.alpha)
        .set("gamma", params.gamma)
        .set("L", params.lipschitz)
        .set("lambda", inst.lambda)
        .set("x1", "zero")
        .set("stop_reason", stop_reason_str(run.stop_reason));
    artifacts::write_gpgm(dir, label, &meta, &x1, &run.records, cfg.timing)?;
    let last = run.records.last();
    Ok(SolverSummary {
        label: label.to_string(),
        iterations: run.records.len(),
        final_obj: last.map_or(f64::NAN, |r| r.obj),
        final_gap: last.and_then(|r| r.obj_gap),
        final_feas: None,
        final_rel_err: None,
        certificate: None,
    })
}

fn run_qp(
    dir: &Path,
    inst: &QpInstance,
    spec: &SolverSpec,
    label: &str,
    reference: &Reference,
    cfg: &ExperimentConfig,
) -> Result<SolverSummary> {
    let l = inst.problem.f.lipschitz();
    let m = inst.problem.b.len() as f64;
    let (alpha, kappa) = match spec.name {
        SolverName::Glalm => (spec.get("alpha").unwrap_or(0.5), spec.get("kappa").unwrap_or(1.5)),
        _ => (1.0, 1.0),
    };
    let gamma = spec.get("gamma").unwrap_or(15.0 * m);
    let glalm = GlalmConfig::new(l, alpha, kappa, gamma, spec.get("eta"), InnerConfig::default())?;
    let x1 = vec![0.0; inst.problem.dim()];
    let run = glalm_run(&inst.problem, &glalm, &x1, &qp_stop(cfg), Some(reference))?;
    let mut meta = Meta::new();
    meta.set("solver", spec.name.as_str())
        .set("alpha", alpha)
        .set("kappa", kappa)
        .set("gamma", gamma)
        .set("eta", glalm.eta)
        .set("L", l)
        .set("x1", "zero")
        .set("stop_reason", stop_reason_str(run.stop_reason));
    if let Some(zn) = run.z_star_norm {
        meta.set("rho", accelopt::certificates::rho_for(zn));
    }
    artifacts::write_glalm(dir, label, &meta, &x1, &run.records, cfg.timing)?;
    let last = run.records.last();
    Ok(SolverSummary {
        label: label.to_string(),
        iterations: run.records.len(),
        final_obj: last.map_or(f64::NAN, |r| r.obj),
        final_gap: last.and_then(|r| r.obj_gap),
        final_feas: last.map(|r| r.feas),
        final_rel_err: None,
        certificate: None,
    })
}

fn run_cs(
    dir: &Path,
    inst: &CsInstance,
    spec: &SolverSpec,
    label: &str,
    reference: &Reference,
    op_norm: f64,
    cfg: &ExperimentConfig,
) -> Result<SolverSummary> {
    let problem = &inst.problem;
    let l = problem.f.lipschitz();
    let horizon = spec.get("n").map_or(cfg.horizon, |n| n as usize);
    let gamma = spec.get("gamma").unwrap_or(1.0 / op_norm);
    let x1 = vec![0.0; problem.x_dim()];
    let y1 = vec![0.0; problem.y_dim()];
    let mut meta = Meta::new();
    meta.set("solver", spec.name.as_str())
        .set("gamma", gamma)
        .set("L", l)
        .set("horizon", horizon)
        .set("op_norm", op_norm)
        .set("x1", "zero")
        .set("y1", "zero");

    let (records, x_final): (Vec<GladmmRecord>, Vec<f64>) = match spec.name {
        SolverName::Ladmm => {
            let lcfg = LadmmConfig::standard(l, gamma, op_norm * op_norm, horizon);
            meta.set("rho", lcfg.rho).set("eta", lcfg.eta);
            let (records, state) = ladmm_run(problem, &lcfg, &x1, &y1, Some(reference), Some(&inst.x_true))?;
            (records, state.x)
        }
        _ => {
            let (alpha, kappa, beta_default) = match spec.name {
                SolverName::Gladmm => (spec.get("alpha").unwrap_or(0.8), spec.get("kappa").unwrap_or(1.5), None),
                _ => (1.0, 1.0, Some(1.0)),
            };
            let xi = spec.get("xi").unwrap_or(1.5);
            let beta = spec.get("beta").or(beta_default).unwrap_or(1.0 / xi);
            let schedule = GladmmSchedule::new(horizon, alpha, beta, kappa, gamma, xi, l)?;
            meta.set("alpha", alpha).set("beta", beta).set("kappa", kappa).set("xi", xi);
            if let Some(z) = &reference.z {
                meta.set("rho", accelopt::certificates::rho_for(accelopt::linalg::norm(z)));
            }
            let run = gladmm_run(problem, &GladmmConfig::new(schedule), &x1, &y1, Some(reference), Some(&inst.x_true))?;
            (run.records, run.state.x_ag)
        }
    };
    meta.set("stop_reason", "horizon");
    artifacts::write_gladmm(dir, label, &meta, &x1, &records, cfg.timing)?;
    save_pgm(&dir.join(format!("recon_{label}.pgm")), inst.size, inst.size, &x_final)?;
    let last = records.last();
    Ok(SolverSummary {
        label: label.to_string(),
        iterations: records.len(),
        final_obj: last.map_or(f64::NAN, |r| r.obj),
        final_gap: last.and_then(|r| r.obj_gap),
        final_feas: last.map(|r| r.feas),
        final_rel_err: last.and_then(|r| r.rel_err),
        certificate: None,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |v| format!("{v:.6e}"))
}

fn summary_text(cfg: &ExperimentConfig, summary: &RunSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment {} seed {}", cfg.kind, cfg.seed);
    let _ = writeln!(s, "f_star {:.12e}", summary.f_star);
    let _ = writeln!(s, "label iterations final_obj final_gap final_feas final_rel_err");
    for r in &summary.solvers {
        let _ = writeln!(
            s,
            "{} {} {:.12e} {} {} {}",
            r.label,
            r.iterations,
            r.final_obj,
            fmt_opt(r.final_gap),
            fmt_opt(r.final_feas),
            fmt_opt(r.final_rel_err)
        );
    }
    let _ = writeln!(s, "certificates:");
    for r in &summary.solvers {
        if let Some(c) = &r.certificate {
            let _ = writeln!(s, "  {}", certify::describe(c));
        }
    }
    s
}

/// Runs the configured experiment into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let inst = build_instance(cfg)?;
    write_instance(dir, &inst, cfg)?;
    let reference = compute_reference(&inst, cfg).context("reference solve")?;
    artifacts::write_reference(dir, &reference, by_star_sq(&inst, &reference))?;
    let stored = artifacts::load_reference(dir)?;

    let op_norm = match &inst {
        Instance::Cs(i) => Some(power_iteration(i.problem.a.as_ref(), 1e-12, 100_000, cfg.seed)?.sqrt()),
        _ => None,
    };

    let mut solvers = Vec::new();
    for (spec, label) in cfg.solvers.iter().zip(labels(&cfg.solvers)) {
        let mut s = match &inst {
            Instance::Logistic(i) => run_logistic(dir, i, spec, &label, &reference, cfg),
            Instance::Qp(i) => run_qp(dir, i, spec, &label, &reference, cfg),
            Instance::Cs(i) => run_cs(dir, i, spec, &label, &reference, op_norm.unwrap_or(1.0), cfg),
        }
        .with_context(|| format!("running {label}"))?;
        s.certificate = Some(certify::certify_label(dir, &label, &stored).with_context(|| format!("certifying {label}"))?);
        solvers.push(s);
    }
    let summary = RunSummary {
        f_star: reference.f_star,
        solvers,
    };
    fs::write(dir.join("summary.txt"), summary_text(cfg, &summary))?;
    Ok(summary)
}
