//! Güler-type accelerated linearized ADMM for
//! `min f(x) + g(y)  s.t.  By − Ax = b`, plus the unaccelerated linearized
//! ADMM baseline.
//!
//! `α = β = κ = 1` gives the accelerated linearized ADMM without extra
//! extrapolation of `x̂`, `ŷ`, `ẑ`.

use std::time::Instant;

use crate::certificates::{gap_q, gladmm_bound_at, GladmmBoundInputs};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{
    axpy, cg_solve_warm, dist, dist_sq, lincomb, norm, power_iteration, sub,
    NormalOperator,
};
use crate::problems::{Reference, TwoBlockProblem};
use crate::schedules::{validate_gladmm, GladmmSchedule, GladmmStep};
use crate::subproblem::{solve_subproblem, InnerConfig, InnerWorkspace, Subproblem};

#[derive(Clone, Copy, Debug)]
pub struct GladmmConfig {
    pub schedule: GladmmSchedule,
    /// CG tolerance relative to `max(1, ‖rhs‖)`.
    pub cg_tol: f64,
    pub cg_max: usize,
    /// Inner solver for the y-update when `B` is not the identity.
    pub inner: InnerConfig,
}

impl GladmmConfig {
    pub fn new(schedule: GladmmSchedule) -> Self {
        Self {
            schedule,
            cg_tol: 1e-10,
            cg_max: 10_000,
            inner: InnerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GladmmState {
    pub k: usize,
    pub horizon: usize,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub x_ag: Vec<f64>,
    pub y: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub y_ag: Vec<f64>,
    pub z: Vec<f64>,
    pub z_hat: Vec<f64>,
    pub z_ag: Vec<f64>,
}

impl GladmmState {
    /// Requires `By¹ = Ax¹ + b` to `1e-10` (relative to `1 + ‖b‖`).
    pub fn new(problem: &TwoBlockProblem, x1: Vec<f64>, y1: Vec<f64>, horizon: usize) -> Result<Self> {
        check_dim("GLADMM x¹", problem.x_dim(), x1.len())?;
        check_dim("GLADMM y¹", problem.y_dim(), y1.len())?;
        let res = problem.feasibility(&x1, &y1);
        if res > 1e-10 * (1.0 + norm(&problem.rhs)) {
            return Err(Error::InvalidArgument(format!(
                "initial pair must satisfy By¹ = Ax¹ + b (residual {res:e})"
            )));
        }
        let m = problem.rhs.len();
        Ok(Self {
            k: 1,
            horizon,
            x_hat: x1.clone(),
            x_ag: x1.clone(),
            x: x1,
            y_hat: y1.clone(),
            y_ag: y1.clone(),
            y: y1,
            z: vec![0.0; m],
            z_hat: vec![0.0; m],
            z_ag: vec![0.0; m],
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct GladmmWorkspace {
    inner: InnerWorkspace,
    b_norm_sq: Option<f64>,
}

impl GladmmWorkspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Solves `(λ_k AᵀA + η_k I) x = η_k x̂ + Aᵀ(λ_k(Bŷ − b) − ẑ) − ∇f(x_md)`
/// by CG, warm-started at `warm`.
#[allow(clippy::too_many_arguments)]
pub fn gladmm_x_update(
    problem: &TwoBlockProblem,
    x_hat: &[f64],
    y_hat: &[f64],
    z_hat: &[f64],
    grad_md: &[f64],
    lambda: f64,
    eta: f64,
    warm: &[f64],
    cg_tol: f64,
    cg_max: usize,
) -> Result<Vec<f64>> {
    let a = problem.a.as_ref();
    let by = problem.b_op.apply(y_hat);
    let inner = lincomb(lambda, &sub(&by, &problem.rhs), -1.0, z_hat);
    let mut rhs = a.apply_adjoint(&inner);
    axpy(eta, x_hat, &mut rhs);
    axpy(-1.0, grad_md, &mut rhs);
    let op = NormalOperator {
        op: a,
        weight: lambda,
        shift: eta,
    };
    cg_solve_warm(&op, &rhs, warm, cg_tol, cg_max)
}

/// `argmin g(y) − ⟨ẑ, By⟩ + τ/2‖By − Ax − b‖²`; closed form for `B = I`.
fn y_update(
    problem: &TwoBlockProblem,
    x_next: &[f64],
    z_hat: &[f64],
    tau: f64,
    warm: &[f64],
    inner: &InnerConfig,
    ws: &mut GladmmWorkspace,
) -> Result<Vec<f64>> {
    let mut axb = problem.a.apply(x_next);
    axpy(1.0, &problem.rhs, &mut axb);
    if problem.b_op.is_identity() {
        let v = lincomb(1.0, &axb, 1.0 / tau, z_hat);
        return Ok(problem.g.prox(&v, tau));
    }
    let b_norm_sq = match ws.b_norm_sq {
        Some(v) => v,
        None => {
            let v = power_iteration(problem.b_op.as_ref(), 1e-10, 100_000, 0xb)? * (1.0 + 1e-6);
            ws.b_norm_sq = Some(v);
            v
        }
    };
    let linear: Vec<f64> = problem.b_op.apply_adjoint(z_hat).iter().map(|v| -v).collect();
    let sp = Subproblem {
        linear: &linear,
        g: problem.g.as_ref(),
        op: problem.b_op.as_ref(),
        target: &axb,
        penalty: tau,
        prox_weight: 0.0,
        center: warm,
        op_norm_sq: b_norm_sq,
    };
    Ok(solve_subproblem(&sp, inner, &mut ws.inner)?.x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GladmmStepInfo {
    /// `‖(By − Ax − b) − (ẑ − z)/γ_k‖ / max(1, ‖By − Ax − b‖)` after the step.
    pub multiplier_residual: f64,
}

pub fn gladmm_step(
    state: &mut GladmmState,
    problem: &TwoBlockProblem,
    cfg: &GladmmConfig,
    ws: &mut GladmmWorkspace,
) -> Result<GladmmStepInfo> {
    let step: GladmmStep = cfg.schedule.at(state.k)?;
    let s = &cfg.schedule;
    let theta = step.theta;

    let x_md = lincomb(1.0 - theta, &state.x_ag, theta, &state.x_hat);
    let grad = problem.f.gradient(&x_md);
    let x_next = gladmm_x_update(
        problem,
        &state.x_hat,
        &state.y_hat,
        &state.z_hat,
        &grad,
        step.lambda,
        step.eta,
        &state.x,
        cfg.cg_tol,
        cfg.cg_max,
    )?;
    check_finite("GLADMM x-update", &x_next)?;
    let x_hat_next = lincomb(2.0 - s.alpha, &x_next, s.alpha - 1.0, &state.x_hat);
    let x_ag_next = lincomb(1.0 - theta, &state.x_ag, theta, &x_next);

    let y_next = y_update(problem, &x_next, &state.z_hat, step.tau, &state.y, &cfg.inner, ws)?;
    check_finite("GLADMM y-update", &y_next)?;
    let y_hat_next = lincomb(2.0 - s.beta, &y_next, s.beta - 1.0, &state.y_hat);
    let y_ag_next = lincomb(1.0 - theta, &state.y_ag, theta, &y_next);

    let res = problem.residual(&x_next, &y_next);
    let z_next = lincomb(1.0, &state.z_hat, -step.gamma_k, &res);
    let z_hat_next = lincomb(1.0 - s.kappa, &state.z_hat, s.kappa, &z_next);
    let z_ag_next = lincomb(1.0 - theta, &state.z_ag, theta, &z_next);

    let implied = lincomb(1.0 / step.gamma_k, &state.z_hat, -1.0 / step.gamma_k, &z_next);
    let multiplier_residual = dist(&res, &implied) / norm(&res).max(1.0);

    state.x = x_next;
    state.x_hat = x_hat_next;
    state.x_ag = x_ag_next;
    state.y = y_next;
    state.y_hat = y_hat_next;
    state.y_ag = y_ag_next;
    state.z = z_next;
    state.z_hat = z_hat_next;
    state.z_ag = z_ag_next;
    state.k += 1;
    Ok(GladmmStepInfo { multiplier_residual })
}

/// Row `k` describes the iterates after step `k` (superscript `k+1`).
#[derive(Clone, Debug, PartialEq)]
pub struct GladmmRecord {
    pub k: usize,
    pub obj: f64,
    pub obj_gap: Option<f64>,
    pub feas: f64,
    pub rel_err: Option<f64>,
    /// `Q(x*, y*, z*; w^{k+1})` at the reported iterate.
    pub gap_q: Option<f64>,
    /// Per-step rate bound on `max(|F gap|, feas)`.
    pub bound: Option<f64>,
    pub multiplier_residual: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct GladmmRun {
    pub records: Vec<GladmmRecord>,
    pub state: GladmmState,
    pub bound_inputs: Option<GladmmBoundInputs>,
}

impl GladmmRun {
    /// Row of the aggregated iterate `w_ag^N` (after step `N − 1`).
    pub fn certified_record(&self) -> Option<&GladmmRecord> {
        let n = self.state.horizon;
        if n < 2 {
            return None;
        }
        self.records.iter().find(|r| r.k == n - 1)
    }
}

/// Bound inputs with `x*`, `y*`, `z*` and `F*`.
type BoundRefs = (GladmmBoundInputs, Vec<f64>, Vec<f64>, Vec<f64>, f64);

fn bound_inputs(
    problem: &TwoBlockProblem,
    schedule: &GladmmSchedule,
    x1: &[f64],
    y1: &[f64],
    reference: Option<&Reference>,
) -> Result<Option<BoundRefs>> {
    let Some(r) = reference else { return Ok(None) };
    let y_star = r.y.clone().ok_or(Error::MissingReference("y*"))?;
    let z_star = r.z.clone().ok_or(Error::MissingReference("multiplier z*"))?;
    check_dim("reference x*", problem.x_dim(), r.x.len())?;
    check_dim("reference y*", problem.y_dim(), y_star.len())?;
    let inputs = GladmmBoundInputs {
        horizon: schedule.horizon,
        lipschitz: schedule.lipschitz,
        alpha: schedule.alpha,
        beta: schedule.beta,
        kappa: schedule.kappa,
        gamma: schedule.gamma,
        xi: schedule.xi,
        x_dist_sq: dist_sq(x1, &r.x),
        by_dist_sq: dist_sq(&problem.b_op.apply(y1), &problem.b_op.apply(&y_star)),
        z_star_norm: norm(&z_star),
    };
    Ok(Some((inputs, r.x.clone(), y_star, z_star, r.f_star)))
}

/// Runs exactly `N` steps after checking the schedule conditions.
pub fn gladmm_run(
    problem: &TwoBlockProblem,
    cfg: &GladmmConfig,
    x1: &[f64],
    y1: &[f64],
    reference: Option<&Reference>,
    x_true: Option<&[f64]>,
) -> Result<GladmmRun> {
    let schedule = &cfg.schedule;
    let violations = validate_gladmm(schedule, schedule.beta);
    if let Some(v) = violations.first() {
        return Err(Error::ScheduleViolation(format!(
            "{v} ({} violation(s) in total)",
            violations.len()
        )));
    }
    let start = Instant::now();
    let mut state = GladmmState::new(problem, x1.to_vec(), y1.to_vec(), schedule.horizon)?;
    let mut ws = GladmmWorkspace::new();
    let refs = bound_inputs(problem, schedule, x1, y1, reference)?;
    let true_norm = x_true.map(norm);

    let mut records = Vec::with_capacity(schedule.horizon);
    for _ in 0..schedule.horizon {
        let k = state.k;
        let info = gladmm_step(&mut state, problem, cfg, &mut ws)?;
        let obj = problem.objective(&state.x_ag, &state.y_ag);
        let mut rec = GladmmRecord {
            k,
            obj,
            obj_gap: None,
            feas: problem.feasibility(&state.x_ag, &state.y_ag),
            rel_err: x_true.zip(true_norm).map(|(t, tn)| dist(&state.x_ag, t) / tn),
            gap_q: None,
            bound: None,
            multiplier_residual: Some(info.multiplier_residual),
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        if let Some((inputs, xs, ys, zs, f_star)) = &refs {
            rec.obj_gap = Some(obj - f_star);
            rec.gap_q = Some(gap_q(xs, ys, zs, &state.x_ag, &state.y_ag, &state.z_ag, problem));
            rec.bound = Some(gladmm_bound_at(inputs, k)?.total());
        }
        records.push(rec);
    }
    Ok(GladmmRun {
        records,
        state,
        bound_inputs: refs.map(|r| r.0),
    })
}

/// Constant-parameter linearized ADMM: penalty `ρ`, prox weight `η`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadmmConfig {
    pub rho: f64,
    pub eta: f64,
    pub iters: usize,
}

impl LadmmConfig {
    /// `ρ = γ`, `η = L + ρ‖A‖²`.
    pub fn standard(lipschitz: f64, gamma: f64, op_norm_sq: f64, iters: usize) -> Self {
        Self {
            rho: gamma,
            eta: lipschitz + gamma * op_norm_sq,
            iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadmmState {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl LadmmState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, m: usize) -> Self {
        Self {
            k: 1,
            x,
            y,
            z: vec![0.0; m],
        }
    }
}

/// `x⁺ = x − (∇f(x) + Aᵀz − ρAᵀ(By − Ax − b))/η`,
/// `y⁺ = argmin g(y) − ⟨z, By⟩ + ρ/2‖By − Ax⁺ − b‖²`,
/// `z⁺ = z − ρ(By⁺ − Ax⁺ − b)`.
pub fn ladmm_step(
    state: &mut LadmmState,
    problem: &TwoBlockProblem,
    cfg: &LadmmConfig,
    inner: &InnerConfig,
    ws: &mut GladmmWorkspace,
) -> Result<()> {
    let res = problem.residual(&state.x, &state.y);
    let mut dir = problem.f.gradient(&state.x);
    let w = lincomb(1.0, &state.z, -cfg.rho, &res);
    axpy(1.0, &problem.a.apply_adjoint(&w), &mut dir);
    let x_next = lincomb(1.0, &state.x, -1.0 / cfg.eta, &dir);
    check_finite("L-ADMM x-update", &x_next)?;
    let y_next = y_update(problem, &x_next, &state.z, cfg.rho, &state.y, inner, ws)?;
    let res_next = problem.residual(&x_next, &y_next);
    state.z = lincomb(1.0, &state.z, -cfg.rho, &res_next);
    state.x = x_next;
    state.y = y_next;
    state.k += 1;
    Ok(())
}

pub fn ladmm_run(
    problem: &TwoBlockProblem,
    cfg: &LadmmConfig,
    x1: &[f64],
    y1: &[f64],
    reference: Option<&Reference>,
    x_true: Option<&[f64]>,
) -> Result<(Vec<GladmmRecord>, LadmmState)> {
    check_dim("L-ADMM x¹", problem.x_dim(), x1.len())?;
    check_dim("L-ADMM y¹", problem.y_dim(), y1.len())?;
    if !(cfg.rho > 0.0) || !(cfg.eta > 0.0) {
        return Err(Error::InvalidArgument("L-ADMM needs ρ > 0 and η > 0".into()));
    }
    let start = Instant::now();
    let mut state = LadmmState::new(x1.to_vec(), y1.to_vec(), problem.rhs.len());
    let mut ws = GladmmWorkspace::new();
    let inner = InnerConfig::default();
    let refs = match reference {
        Some(r) => Some((
            r,
            r.y.as_deref().ok_or(Error::MissingReference("y*"))?,
            r.z.as_deref().ok_or(Error::MissingReference("multiplier z*"))?,
        )),
        None => None,
    };
    let true_norm = x_true.map(norm);
    let mut records = Vec::with_capacity(cfg.iters);
    for _ in 0..cfg.iters {
        let k = state.k;
        ladmm_step(&mut state, problem, cfg, &inner, &mut ws)?;
        let obj = problem.objective(&state.x, &state.y);
        let mut rec = GladmmRecord {
            k,
            obj,
            obj_gap: None,
            feas: problem.feasibility(&state.x, &state.y),
            rel_err: x_true.zip(true_norm).map(|(t, tn)| dist(&state.x, t) / tn),
            gap_q: None,
            bound: None,
            multiplier_residual: None,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        if let Some((r, ys, zs)) = refs {
            rec.obj_gap = Some(obj - r.f_star);
            rec.gap_q = Some(gap_q(&r.x, ys, zs, &state.x, &state.y, &state.z, problem));
        }
        records.push(rec);
    }
    Ok((records, state))
}
