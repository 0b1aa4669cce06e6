//! Offline certificate evaluation from a run directory.
//!
//! Everything is recomputed from `params_<label>.txt`, the trace and aux
//! CSVs, the stored initial point and `reference/`. Nothing is estimated:
//! a missing reference quantity is an error.

use std::io::Write;
use std::path::Path;

use accelopt::certificates::{
    glalm_bound_from_dists, gpgm_bound_from_dists, gladmm_bound_at, CertificateReport, GladmmBoundInputs, Tolerance,
};
use accelopt::io::{load_vector, Meta};
use accelopt::linalg::dist_sq;
use accelopt::schedules::{validate_gladmm, GladmmSchedule};
use accelopt::trace::CsvTable;
use anyhow::{anyhow, bail, Context, Result};

use crate::artifacts::{self, StoredReference};

/// Which certificate a solver's trace is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertKind {
    Gpgm,
    Glalm,
    Gladmm,
}

impl CertKind {
    /// `None` for solvers without a rate certificate (L-ADMM).
    pub fn for_solver(solver: &str) -> Result<Option<Self>> {
        Ok(match solver {
            "gpgm" | "apgm" => Some(Self::Gpgm),
            "glalm" | "alalm" => Some(Self::Glalm),
            "gladmm" | "aladmm" => Some(Self::Gladmm),
            "ladmm" => None,
            other => bail!("unknown solver {other:?} in params file"),
        })
    }
}

#[derive(Clone, Debug)]
pub struct LabelOutcome {
    pub label: String,
    pub solver: String,
    /// `None` when the solver carries no certificate.
    pub report: Option<CertificateReport>,
}

#[derive(Clone, Debug, Default)]
pub struct CertifyOutcome {
    pub labels: Vec<LabelOutcome>,
}

impl CertifyOutcome {
    pub fn violation_count(&self) -> usize {
        self.labels
            .iter()
            .filter_map(|l| l.report.as_ref())
            .map(|r| r.violation_count())
            .sum()
    }
}

fn x1_dist_sq(dir: &Path, label: &str, reference: &StoredReference) -> Result<f64> {
    let x1 = load_vector(&artifacts::x1_path(dir, label)).with_context(|| format!("initial point of {label}"))?;
    if x1.len() != reference.x.len() {
        bail!(
            "initial point of {label} has length {}, reference x* has {}",
            x1.len(),
            reference.x.len()
        );
    }
    Ok(dist_sq(&x1, &reference.x))
}

fn rows(table: &CsvTable, name: &str) -> Result<Vec<f64>> {
    table
        .column(name)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| anyhow!("empty `{name}` at data row {}", i + 1)))
        .collect()
}

fn ks(table: &CsvTable) -> Result<Vec<usize>> {
    rows(table, "k")?
        .into_iter()
        .map(|k| {
            if k >= 1.0 && k.fract() == 0.0 {
                Ok(k as usize)
            } else {
                Err(anyhow!("bad iteration index {k}"))
            }
        })
        .collect()
}

fn check_aligned(trace: &[usize], aux: &[usize]) -> Result<()> {
    if trace != aux {
        bail!("trace and aux files list different iterations");
    }
    Ok(())
}

/// `F(x_ag^{k+1}) − F* ≤ 2γ/((2−α)(k+1)²)(‖x̂¹−x*‖² − ‖x̂^{k+1}−x*‖²)`.
pub fn certify_gpgm(
    params: &Meta,
    trace: &CsvTable,
    aux: &CsvTable,
    reference: &StoredReference,
    x1_dist_sq: f64,
) -> Result<CertificateReport> {
    let alpha = params.get_f64("alpha")?;
    let gamma = params.get_f64("gamma")?;
    let f_star = reference.f_star()?;
    let k = ks(trace)?;
    check_aligned(&k, &ks(aux)?)?;
    let obj = rows(trace, "obj")?;
    let dk = rows(aux, "xhat_dist_sq")?;
    let tol = Tolerance::new(1e-8 * f_star.abs().max(1.0), 1e-8);
    Ok(CertificateReport::from_pairs(
        k.iter()
            .zip(obj.iter().zip(&dk))
            .map(|(&k, (&o, &d))| (k, o - f_star, gpgm_bound_from_dists(k, gamma, alpha, x1_dist_sq, d))),
        tol,
    ))
}

/// `max(|F gap|, ‖Ax_ag − b‖) ≤ glalm bound`.
pub fn certify_glalm(
    params: &Meta,
    trace: &CsvTable,
    reference: &StoredReference,
    x1_dist_sq: f64,
) -> Result<CertificateReport> {
    let alpha = params.get_f64("alpha")?;
    let gamma = params.get_f64("gamma")?;
    let kappa = params.get_f64("kappa")?;
    let eta = params.get_f64("eta")?;
    let f_star = reference.f_star()?;
    let z_norm = reference.z_norm()?;
    let k = ks(trace)?;
    let obj = rows(trace, "obj")?;
    let feas = rows(trace, "feas")?;
    let tol = Tolerance::new(1e-6, 1e-8);
    Ok(CertificateReport::from_pairs(
        k.iter().zip(obj.iter().zip(&feas)).map(|(&k, (&o, &f))| {
            (
                k,
                (o - f_star).abs().max(f),
                glalm_bound_from_dists(k, eta, alpha, gamma, kappa, x1_dist_sq, z_norm),
            )
        }),
        tol,
    ))
}

/// Rebuilds the schedule from `params`; a schedule that fails any step
/// condition is refused, naming the first violated inequality.
pub fn gladmm_schedule_from(params: &Meta) -> Result<GladmmSchedule> {
    let schedule = GladmmSchedule::new(
        params.get_usize("horizon")?,
        params.get_f64("alpha")?,
        params.get_f64("beta")?,
        params.get_f64("kappa")?,
        params.get_f64("gamma")?,
        params.get_f64("xi")?,
        params.get_f64("L")?,
    )?;
    let violations = validate_gladmm(&schedule, schedule.beta);
    if let Some(v) = violations.first() {
        bail!(
            "refusing to certify: schedule violates {} at {v} ({} violation(s))",
            v.condition,
            violations.len()
        );
    }
    Ok(schedule)
}

/// `max(|F gap|, ‖By − Ax − b‖)` at every recorded `k ≤ N` against the
/// per-step two-block bound.
pub fn certify_gladmm(
    params: &Meta,
    trace: &CsvTable,
    reference: &StoredReference,
    x1_dist_sq: f64,
) -> Result<CertificateReport> {
    let schedule = gladmm_schedule_from(params)?;
    if params.get("y1") != Some("zero") {
        bail!("only y¹ = 0 runs can be certified offline (params y1 must be `zero`)");
    }
    let by_dist_sq = reference
        .meta
        .get_f64("by_star_norm_sq")
        .context("reference ‖By*‖² is missing")?;
    let inputs = GladmmBoundInputs {
        horizon: schedule.horizon,
        lipschitz: schedule.lipschitz,
        alpha: schedule.alpha,
        beta: schedule.beta,
        kappa: schedule.kappa,
        gamma: schedule.gamma,
        xi: schedule.xi,
        x_dist_sq: x1_dist_sq,
        by_dist_sq,
        z_star_norm: reference.z_norm()?,
    };
    let f_star = reference.f_star()?;
    let k = ks(trace)?;
    let obj = rows(trace, "obj")?;
    let feas = rows(trace, "feas")?;
    let mut triples = Vec::with_capacity(k.len());
    for (&k, (&o, &f)) in k.iter().zip(obj.iter().zip(&feas)) {
        triples.push((k, (o - f_star).abs().max(f), gladmm_bound_at(&inputs, k)?.total()));
    }
    Ok(CertificateReport::from_pairs(triples, Tolerance::new(1e-5, 1e-8)))
}

/// Certifies one label and writes `cert_<label>.csv`.
pub fn certify_label(dir: &Path, label: &str, reference: &StoredReference) -> Result<LabelOutcome> {
    let params = Meta::load(&artifacts::params_path(dir, label))?;
    let solver = params
        .get("solver")
        .ok_or_else(|| anyhow!("params_{label}.txt has no `solver` key"))?
        .to_string();
    let Some(kind) = CertKind::for_solver(&solver)? else {
        return Ok(LabelOutcome {
            label: label.to_string(),
            solver,
            report: None,
        });
    };
    let trace = artifacts::read_table(&artifacts::trace_path(dir, label))?;
    let d1 = x1_dist_sq(dir, label, reference)?;
    let report = match kind {
        CertKind::Gpgm => {
            let aux = artifacts::read_table(&artifacts::aux_path(dir, label))?;
            certify_gpgm(&params, &trace, &aux, reference, d1)?
        }
        CertKind::Glalm => certify_glalm(&params, &trace, reference, d1)?,
        CertKind::Gladmm => certify_gladmm(&params, &trace, reference, d1)?,
    };
    let mut w = artifacts::create(&artifacts::cert_path(dir, label))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(LabelOutcome {
        label: label.to_string(),
        solver,
        report: Some(report),
    })
}

/// Certifies every solver found in `dir`.
pub fn certify_dir(dir: &Path) -> Result<CertifyOutcome> {
    let reference = artifacts::load_reference(dir)?;
    let labels = artifacts::list_labels(dir)?;
    if labels.is_empty() {
        bail!("no params_<label>.txt files in {}", dir.display());
    }
    let mut out = CertifyOutcome::default();
    for label in labels {
        let outcome = certify_label(dir, &label, &reference).with_context(|| format!("certifying {label}"))?;
        out.labels.push(outcome);
    }
    Ok(out)
}

/// One line per label, for terminal output and `summary.txt`.
pub fn describe(outcome: &LabelOutcome) -> String {
    match &outcome.report {
        None => format!("{}: no rate certificate for {}", outcome.label, outcome.solver),
        Some(r) => {
            let worst = r.worst_slack().map_or("n/a".to_string(), |s| format!("{s:.3e}"));
            let negative = r.negative_bounds().count();
            let mut line = format!(
                "{}: {} rows, {} violation(s), worst slack {worst}",
                outcome.label,
                r.rows.len(),
                r.violation_count()
            );
            if let Some(first) = r.violations().next() {
                line.push_str(&format!(", first at k={}", first.k));
            }
            if negative > 0 {
                line.push_str(&format!(", {negative} negative bound(s) flagged"));
            }
            line
        }
    }
}
