//! Güler-type accelerated proximal gradient method for `min f + g`.
//!
//! With `α = 1` and `γ = L` the extrapolated point coincides with the prox
//! iterate and the loop is Nesterov's second accelerated proximal gradient
//! method.

use std::time::Instant;

use crate::certificates::gpgm_bound_from_dists;
use crate::error::{check_dim, check_finite, Result};
use crate::linalg::{dist, dist_sq, lincomb};
use crate::problems::{CompositeProblem, Reference};
use crate::schedules::{next_t, GpgmParams};
use crate::stopping::{StopReason, StoppingRule};

#[derive(Clone, Debug, PartialEq)]
pub struct GpgmState {
    /// Index of the next step.
    pub k: usize,
    /// `t_{k−1}`.
    pub t_prev: f64,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub x_ag: Vec<f64>,
}

impl GpgmState {
    /// `x_ag¹ = x¹ = x̂¹`, `t_0 = 0`.
    pub fn new(x1: Vec<f64>) -> Self {
        Self {
            k: 1,
            t_prev: 0.0,
            x_hat: x1.clone(),
            x_ag: x1.clone(),
            x: x1,
        }
    }
}

/// One iteration: momentum update, gradient at the middle point, prox step,
/// extrapolation of `x̂` and aggregation.
pub fn gpgm_step(state: &mut GpgmState, problem: &CompositeProblem, params: &GpgmParams) -> Result<()> {
    check_dim("GPGM iterate", problem.dim(), state.x.len())?;
    let t = next_t(state.t_prev);
    let (theta, tau) = params.step(t);
    let alpha = params.alpha;

    let x_md = lincomb(1.0 - theta, &state.x_ag, theta, &state.x_hat);
    let grad = problem.f.gradient(&x_md);
    let w = lincomb(1.0, &state.x_hat, -1.0 / tau, &grad);
    let x_next = problem.g.prox(&w, tau);
    check_finite("GPGM prox step", &x_next)?;
    let x_hat_next = lincomb(alpha - 1.0, &state.x_hat, 2.0 - alpha, &x_next);
    let x_ag_next = lincomb(1.0 - theta, &state.x_ag, theta, &x_next);

    state.x = x_next;
    state.x_hat = x_hat_next;
    state.x_ag = x_ag_next;
    state.t_prev = t;
    state.k += 1;
    Ok(())
}

/// Per-step record; row `k` describes the iterates after step `k`
/// (superscript `k+1`).
#[derive(Clone, Debug, PartialEq)]
pub struct GpgmRecord {
    pub k: usize,
    pub obj: f64,
    pub obj_gap: Option<f64>,
    pub dist_to_opt: Option<f64>,
    pub bound: Option<f64>,
    /// `‖x̂^{k+1} − x*‖²`
    pub xhat_dist_sq: Option<f64>,
    /// `‖x^{k+1} − x*‖²`
    pub x_dist_sq: Option<f64>,
    /// `Φ_{k+1} = t_k²(F(x_ag^{k+1}) − F*) + γ/(2(2−α))‖x̂^{k+1} − x*‖²`
    pub lyapunov: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct GpgmRun {
    pub params: GpgmParams,
    pub records: Vec<GpgmRecord>,
    pub state: GpgmState,
    pub stop_reason: StopReason,
    /// `‖x̂¹ − x*‖²` when a reference was supplied.
    pub xhat1_dist_sq: Option<f64>,
    /// `Φ_1`.
    pub lyapunov_initial: Option<f64>,
}

pub fn gpgm_run(
    problem: &CompositeProblem,
    params: &GpgmParams,
    x1: &[f64],
    stop: &StoppingRule,
    reference: Option<&Reference>,
) -> Result<GpgmRun> {
    check_dim("GPGM initial point", problem.dim(), x1.len())?;
    if let Some(r) = reference {
        check_dim("GPGM reference", problem.dim(), r.x.len())?;
    }
    let start = Instant::now();
    let mut state = GpgmState::new(x1.to_vec());
    let lyap_weight = params.gamma / (2.0 * (2.0 - params.alpha));
    let xhat1_dist_sq = reference.map(|r| dist_sq(x1, &r.x));
    let lyapunov_initial = xhat1_dist_sq.map(|d| lyap_weight * d);

    let mut records = Vec::new();
    let mut objectives = Vec::new();
    let mut stop_reason = StopReason::MaxIters;
    for _ in 0..stop.max_iters() {
        let k = state.k;
        gpgm_step(&mut state, problem, params)?;
        let obj = problem.objective(&state.x_ag);
        objectives.push(obj);
        let mut rec = GpgmRecord {
            k,
            obj,
            obj_gap: None,
            dist_to_opt: None,
            bound: None,
            xhat_dist_sq: None,
            x_dist_sq: None,
            lyapunov: None,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        if let (Some(r), Some(d1)) = (reference, xhat1_dist_sq) {
            let gap = obj - r.f_star;
            let dk = dist_sq(&state.x_hat, &r.x);
            rec.obj_gap = Some(gap);
            rec.dist_to_opt = Some(dist(&state.x_ag, &r.x));
            rec.bound = Some(gpgm_bound_from_dists(k, params.gamma, params.alpha, d1, dk));
            rec.xhat_dist_sq = Some(dk);
            rec.x_dist_sq = Some(dist_sq(&state.x, &r.x));
            rec.lyapunov = Some(state.t_prev * state.t_prev * gap + lyap_weight * dk);
        }
        records.push(rec);
        if let Some(reason) = stop
            .check_objectives(&objectives)
            .or_else(|| stop.check_composite(problem, &state.x_ag))
        {
            stop_reason = reason;
            break;
        }
    }
    Ok(GpgmRun {
        params: *params,
        records,
        state,
        stop_reason,
        xhat1_dist_sq,
        lyapunov_initial,
    })
}
