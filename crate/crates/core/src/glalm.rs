//! Güler-type accelerated linearized augmented Lagrangian method for
//! `min f + g  s.t.  Ax = b`.
//!
//! `α = κ = 1` switches both extrapolations off and gives the accelerated
//! linearized augmented Lagrangian method with the same fixed schedule.

use std::time::Instant;

use crate::certificates::glalm_bound_from_dists;
use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{axpy, dist_sq, dot, lincomb, norm, power_iteration};
use crate::problems::{LinConstrainedProblem, Reference};
use crate::schedules::{GlalmSchedule, GlalmStep};
use crate::stopping::{StopReason, StoppingRule};
use crate::subproblem::{solve_subproblem, InnerConfig, InnerSolution, InnerWorkspace, Subproblem};

#[derive(Clone, Copy, Debug)]
pub struct GlalmConfig {
    pub alpha: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub eta: f64,
    pub lipschitz: f64,
    pub inner: InnerConfig,
    schedule: GlalmSchedule,
}

impl GlalmConfig {
    /// `eta = None` selects `η = 2L/α`. An explicit `η` must satisfy
    /// `η α ≥ 2L`; with `L = 0` any `η > 0` is accepted.
    pub fn new(
        lipschitz: f64,
        alpha: f64,
        kappa: f64,
        gamma: f64,
        eta: Option<f64>,
        inner: InnerConfig,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("α must lie in (0, 1], got {alpha}")));
        }
        if !(lipschitz >= 0.0) {
            return Err(Error::InvalidArgument(format!("L must be nonnegative, got {lipschitz}")));
        }
        let eta = match eta {
            Some(eta) => {
                if eta * alpha < 2.0 * lipschitz * (1.0 - 1e-12) {
                    return Err(Error::InvalidArgument(format!(
                        "η = {eta} is too small: need η ≥ 2L/α = {}",
                        2.0 * lipschitz / alpha
                    )));
                }
                eta
            }
            None if lipschitz > 0.0 => 2.0 * lipschitz / alpha,
            None => {
                return Err(Error::InvalidArgument(
                    "L = 0: η cannot be derived from α and must be given".into(),
                ))
            }
        };
        let schedule = GlalmSchedule::new(gamma, kappa, eta)?;
        Ok(Self {
            alpha,
            kappa,
            gamma,
            eta,
            lipschitz,
            inner,
            schedule,
        })
    }

    pub fn schedule(&self) -> &GlalmSchedule {
        &self.schedule
    }

    pub fn is_reduction(&self) -> bool {
        self.alpha == 1.0 && self.kappa == 1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlalmState {
    pub k: usize,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub x_ag: Vec<f64>,
    pub z: Vec<f64>,
    pub z_hat: Vec<f64>,
}

impl GlalmState {
    /// `x_ag¹ = x¹ = x̂¹`, `z¹ = ẑ¹ = 0` with `m` constraints.
    pub fn new(x1: Vec<f64>, m: usize) -> Self {
        Self {
            k: 1,
            x_hat: x1.clone(),
            x_ag: x1.clone(),
            x: x1,
            z: vec![0.0; m],
            z_hat: vec![0.0; m],
        }
    }
}

/// Inner-solver state plus a cached `‖A‖²`.
#[derive(Clone, Debug, Default)]
pub struct GlalmWorkspace {
    inner: InnerWorkspace,
    op_norm_sq: Option<f64>,
}

impl GlalmWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn op_norm_sq(&mut self, problem: &LinConstrainedProblem) -> Result<f64> {
        if let Some(v) = self.op_norm_sq {
            return Ok(v);
        }
        // slight inflation keeps the inner step size safe against the
        // Rayleigh-quotient underestimate
        let v = power_iteration(problem.a.as_ref(), 1e-10, 100_000, 0xa)? * (1.0 + 1e-6);
        self.op_norm_sq = Some(v);
        Ok(v)
    }
}

/// `argmin ⟨∇f(x_md) − Aᵀẑ, x⟩ + g(x) + κ_k/2‖Ax − b‖² + p_k/2‖x − x̂‖²`.
pub fn glalm_x_update(
    x_hat: &[f64],
    z_hat: &[f64],
    grad_md: &[f64],
    problem: &LinConstrainedProblem,
    step: &GlalmStep,
    inner: &InnerConfig,
    ws: &mut GlalmWorkspace,
) -> Result<InnerSolution> {
    let mut linear = grad_md.to_vec();
    axpy(-1.0, &problem.a.apply_adjoint(z_hat), &mut linear);
    let op_norm_sq = ws.op_norm_sq(problem)?;
    let sp = Subproblem {
        linear: &linear,
        g: problem.g.as_ref(),
        op: problem.a.as_ref(),
        target: &problem.b,
        penalty: step.kappa_k,
        prox_weight: step.p_k,
        center: x_hat,
        op_norm_sq,
    };
    solve_subproblem(&sp, inner, &mut ws.inner)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlalmStepInfo {
    pub inner_iterations: usize,
    pub inner_residual: f64,
}

pub fn glalm_step(
    state: &mut GlalmState,
    problem: &LinConstrainedProblem,
    cfg: &GlalmConfig,
    ws: &mut GlalmWorkspace,
) -> Result<GlalmStepInfo> {
    check_dim("GLALM iterate", problem.dim(), state.x.len())?;
    check_dim("GLALM multiplier", problem.b.len(), state.z.len())?;
    let step = cfg.schedule.at(state.k)?;
    let theta = step.theta;
    let (alpha, kappa) = (cfg.alpha, cfg.kappa);

    let x_md = lincomb(1.0 - theta, &state.x_ag, theta, &state.x_hat);
    let grad = problem.f.gradient(&x_md);
    let sol = glalm_x_update(&state.x_hat, &state.z_hat, &grad, problem, &step, &cfg.inner, ws)?;
    let x_next = sol.x;
    check_finite("GLALM x-update", &x_next)?;
    let x_hat_next = lincomb(alpha - 1.0, &state.x_hat, 2.0 - alpha, &x_next);
    let x_ag_next = lincomb(1.0 - theta, &state.x_ag, theta, &x_next);
    let residual = problem.residual(&x_next);
    let z_next = lincomb(1.0, &state.z_hat, -step.gamma_k, &residual);
    let z_hat_next = lincomb(1.0 - kappa, &state.z_hat, kappa, &z_next);

    state.x = x_next;
    state.x_hat = x_hat_next;
    state.x_ag = x_ag_next;
    state.z = z_next;
    state.z_hat = z_hat_next;
    state.k += 1;
    Ok(GlalmStepInfo {
        inner_iterations: sol.iterations,
        inner_residual: sol.residual,
    })
}

/// Row `k` describes the iterates after step `k` (superscript `k+1`).
#[derive(Clone, Debug, PartialEq)]
pub struct GlalmRecord {
    pub k: usize,
    pub obj: f64,
    pub obj_gap: Option<f64>,
    /// `‖Ax_ag^{k+1} − b‖`
    pub feas: f64,
    pub bound: Option<f64>,
    /// `Ψ_{k+1}` at `z = z*`.
    pub lyapunov: Option<f64>,
    pub inner_iterations: usize,
    pub inner_residual: f64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct GlalmRun {
    pub config: GlalmConfig,
    pub records: Vec<GlalmRecord>,
    pub state: GlalmState,
    pub stop_reason: StopReason,
    /// `‖x¹ − x*‖²`
    pub x1_dist_sq: Option<f64>,
    pub z_star_norm: Option<f64>,
    /// `Ψ_1`
    pub lyapunov_initial: Option<f64>,
}

/// `Ψ = (k−1)k (F(x_ag) − F* − ⟨z, Ax_ag − b⟩) + η/(2−α)‖x̂ − x*‖² + ‖ẑ − z‖²/(κγ)`
/// for the state at index `k`.
pub fn glalm_lyapunov(
    state: &GlalmState,
    problem: &LinConstrainedProblem,
    cfg: &GlalmConfig,
    x_star: &[f64],
    f_star: f64,
    z: &[f64],
) -> f64 {
    let k = state.k as f64;
    let lagr = problem.objective(&state.x_ag) - f_star - dot(z, &problem.residual(&state.x_ag));
    (k - 1.0) * k * lagr
        + cfg.eta / (2.0 - cfg.alpha) * dist_sq(&state.x_hat, x_star)
        + dist_sq(&state.z_hat, z) / (cfg.kappa * cfg.gamma)
}

pub fn glalm_run(
    problem: &LinConstrainedProblem,
    cfg: &GlalmConfig,
    x1: &[f64],
    stop: &StoppingRule,
    reference: Option<&Reference>,
) -> Result<GlalmRun> {
    check_dim("GLALM initial point", problem.dim(), x1.len())?;
    let start = Instant::now();
    let mut state = GlalmState::new(x1.to_vec(), problem.b.len());
    let mut ws = GlalmWorkspace::new();

    let refs = match reference {
        Some(r) => {
            let z = r.z.as_deref().ok_or(Error::MissingReference("multiplier z*"))?;
            check_dim("GLALM reference", problem.dim(), r.x.len())?;
            Some((r, z))
        }
        None => None,
    };
    let x1_dist_sq = refs.map(|(r, _)| dist_sq(x1, &r.x));
    let z_star_norm = refs.map(|(_, z)| norm(z));
    let lyapunov_initial = refs.map(|(r, z)| glalm_lyapunov(&state, problem, cfg, &r.x, r.f_star, z));

    let mut records = Vec::new();
    let mut objectives = Vec::new();
    let mut stop_reason = StopReason::MaxIters;
    for _ in 0..stop.max_iters() {
        let k = state.k;
        let info = glalm_step(&mut state, problem, cfg, &mut ws)?;
        let obj = problem.objective(&state.x_ag);
        objectives.push(obj);
        let mut rec = GlalmRecord {
            k,
            obj,
            obj_gap: None,
            feas: problem.feasibility(&state.x_ag),
            bound: None,
            lyapunov: None,
            inner_iterations: info.inner_iterations,
            inner_residual: info.inner_residual,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        if let (Some((r, z)), Some(d1), Some(zn)) = (refs, x1_dist_sq, z_star_norm) {
            rec.obj_gap = Some(obj - r.f_star);
            rec.bound = Some(glalm_bound_from_dists(k, cfg.eta, cfg.alpha, cfg.gamma, cfg.kappa, d1, zn));
            rec.lyapunov = Some(glalm_lyapunov(&state, problem, cfg, &r.x, r.f_star, z));
        }
        records.push(rec);
        if let Some(reason) = stop.check_objectives(&objectives) {
            stop_reason = reason;
            break;
        }
    }
    Ok(GlalmRun {
        config: *cfg,
        records,
        state,
        stop_reason,
        x1_dist_sq,
        z_star_norm,
        lyapunov_initial,
    })
}
