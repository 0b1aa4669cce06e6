//! Solver for the linearized augmented subproblem
//!
//! ```text
//! min_x ⟨c, x⟩ + g(x) + pen/2 ‖Ax − b‖² + p/2 ‖x − v‖²
//! ```
//!
//! that appears in the x-update of the linearized augmented Lagrangian
//! method and in the y-update of the two-block method for general `B`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot, lincomb, norm, norm_sq, sub, LinearOperator};
use crate::prox::ProxOracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerMethod {
    /// Dual semismooth Newton when its requirements hold, else proximal gradient.
    Auto,
    /// Accelerated proximal gradient on the smooth part.
    ProxGradient,
    /// Semismooth Newton on the dual of the penalty term; needs a dense
    /// operator, `p > 0` and a prox with a 0/1 Jacobian.
    DualNewton,
}

#[derive(Clone, Copy, Debug)]
pub struct InnerConfig {
    /// Stopping tolerance; `None` uses `1e-10 (1 + ‖v‖)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub method: InnerMethod,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            tol: None,
            max_iter: 50_000,
            method: InnerMethod::Auto,
        }
    }
}

impl InnerConfig {
    pub fn tolerance(&self, center: &[f64]) -> f64 {
        self.tol.unwrap_or_else(|| 1e-10 * (1.0 + norm(center)))
    }
}

/// Problem data, all borrowed.
pub struct Subproblem<'a> {
    pub linear: &'a [f64],
    pub g: &'a dyn ProxOracle,
    pub op: &'a dyn LinearOperator,
    pub target: &'a [f64],
    pub penalty: f64,
    pub prox_weight: f64,
    pub center: &'a [f64],
    /// `‖A‖²`, used as the curvature bound of the proximal-gradient path.
    pub op_norm_sq: f64,
}

impl Subproblem<'_> {
    pub fn objective(&self, x: &[f64]) -> f64 {
        let r = sub(&self.op.apply(x), self.target);
        let d = sub(x, self.center);
        dot(self.linear, x)
            + self.g.value(x)
            + 0.5 * self.penalty * norm_sq(&r)
            + 0.5 * self.prox_weight * norm_sq(&d)
    }

    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = sub(&self.op.apply(x), self.target);
        let mut grad = self.linear.to_vec();
        if self.penalty != 0.0 {
            axpy(self.penalty, &self.op.apply_adjoint(&r), &mut grad);
        }
        if self.prox_weight != 0.0 {
            axpy(self.prox_weight, &sub(x, self.center), &mut grad);
        }
        grad
    }
}

#[derive(Clone, Debug)]
pub struct InnerSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Fixed-point residual (proximal gradient) or dual gradient norm (Newton).
    pub residual: f64,
    pub method: InnerMethod,
}

/// Warm-start storage carried across outer iterations.
#[derive(Clone, Debug, Default)]
pub struct InnerWorkspace {
    x: Option<Vec<f64>>,
    dual: Option<Vec<f64>>,
    dense: Option<DMatrix<f64>>,
}

impl InnerWorkspace {
    pub fn new() -> Self {
        Self::default()
    }
}

pub fn solve_subproblem(
    sp: &Subproblem<'_>,
    cfg: &InnerConfig,
    ws: &mut InnerWorkspace,
) -> Result<InnerSolution> {
    let n = sp.op.in_dim();
    check_dim("subproblem linear term", n, sp.linear.len())?;
    check_dim("subproblem center", n, sp.center.len())?;
    check_dim("subproblem target", sp.op.out_dim(), sp.target.len())?;
    if !(sp.penalty >= 0.0) || !(sp.prox_weight >= 0.0) {
        return Err(Error::InvalidArgument("subproblem weights must be nonnegative".into()));
    }
    let tol = cfg.tolerance(sp.center);

    if sp.penalty == 0.0 && sp.prox_weight > 0.0 {
        let w = lincomb(1.0, sp.center, -1.0 / sp.prox_weight, sp.linear);
        return Ok(InnerSolution {
            x: sp.g.prox(&w, sp.prox_weight),
            iterations: 0,
            residual: 0.0,
            method: cfg.method,
        });
    }

    let newton_ready = sp.prox_weight > 0.0
        && sp.op.as_dense().is_some()
        && sp.g.prox_jacobian_diag(sp.center, sp.prox_weight).is_some();
    match cfg.method {
        InnerMethod::DualNewton if !newton_ready => Err(Error::Unsupported(
            "dual Newton needs a dense operator, p > 0 and a prox with a 0/1 Jacobian".into(),
        )),
        InnerMethod::DualNewton => dual_newton(sp, tol, cfg.max_iter, ws),
        InnerMethod::Auto if newton_ready => dual_newton(sp, tol, cfg.max_iter, ws),
        _ => prox_gradient(sp, tol, cfg.max_iter, ws),
    }
}

fn prox_gradient(
    sp: &Subproblem<'_>,
    tol: f64,
    max_iter: usize,
    ws: &mut InnerWorkspace,
) -> Result<InnerSolution> {
    let lh = sp.penalty * sp.op_norm_sq + sp.prox_weight;
    if !(lh > 0.0) {
        return Err(Error::InvalidArgument("subproblem has no curvature".into()));
    }
    let mu = sp.prox_weight;
    let strongly = mu > 0.0;
    let fixed_momentum = if strongly {
        let (sl, sm) = (lh.sqrt(), mu.sqrt());
        (sl - sm) / (sl + sm)
    } else {
        0.0
    };

    let mut x = match ws.x.take() {
        Some(x) if x.len() == sp.center.len() => x,
        _ => sp.center.to_vec(),
    };
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let grad = sp.smooth_gradient(&y);
        let w = lincomb(1.0, &y, -1.0 / lh, &grad);
        let x_new = sp.g.prox(&w, lh);
        residual = norm(&sub(&x_new, &y));
        if residual <= tol {
            ws.x = Some(x_new.clone());
            return Ok(InnerSolution {
                x: x_new,
                iterations: it,
                residual,
                method: InnerMethod::ProxGradient,
            });
        }
        let step = sub(&x_new, &x);
        let beta = if strongly {
            fixed_momentum
        } else {
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let b = (t - 1.0) / t_next;
            t = t_next;
            b
        };
        // gradient-based restart
        let restart = dot(&sub(&y, &x_new), &step) > 0.0;
        if restart {
            t = 1.0;
            y = x_new.clone();
        } else {
            y = lincomb(1.0, &x_new, beta, &step);
        }
        x = x_new;
    }
    ws.x = Some(x);
    Err(Error::InnerNotConverged {
        iterations: max_iter,
        residual,
    })
}

fn dual_newton(
    sp: &Subproblem<'_>,
    tol: f64,
    max_iter: usize,
    ws: &mut InnerWorkspace,
) -> Result<InnerSolution> {
    let a = sp.op.as_dense().expect("checked by caller");
    let (m, n) = (a.rows(), a.cols());
    let (pen, p) = (sp.penalty, sp.prox_weight);
    let dense = match ws.dense.take() {
        Some(d) if d.nrows() == m && d.ncols() == n => d,
        _ => DMatrix::from_row_slice(m, n, a.data()),
    };

    // x(u) = prox_g(v − (c + Aᵀu)/p, p)
    let primal = |u: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut w = sp.linear.to_vec();
        axpy(1.0, &sp.op.apply_adjoint(u), &mut w);
        let w = lincomb(1.0, sp.center, -1.0 / p, &w);
        (sp.g.prox(&w, p), w)
    };
    // concave dual value and its gradient Ax(u) − b − u/pen
    let evaluate = |u: &[f64]| -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let (x, w) = primal(u);
        let r = sub(&sp.op.apply(&x), sp.target);
        let d = sub(&x, sp.center);
        let value = dot(sp.linear, &x) + sp.g.value(&x) + 0.5 * p * norm_sq(&d) + dot(u, &r)
            - norm_sq(u) / (2.0 * pen);
        let grad = lincomb(1.0, &r, -1.0 / pen, u);
        (value, grad, x, w)
    };

    let mut u = match ws.dual.take() {
        Some(u) if u.len() == m => u,
        _ => vec![0.0; m],
    };
    let (mut value, mut grad, mut x, mut w) = evaluate(&u);
    let mut result = None;
    for it in 0..=max_iter {
        let gnorm = norm(&grad);
        if gnorm <= tol {
            result = Some((it, gnorm));
            break;
        }
        if it == max_iter {
            break;
        }
        let jac = sp.g.prox_jacobian_diag(&w, p).expect("checked by caller");
        let mut scaled = dense.clone();
        for (j, jj) in jac.iter().enumerate() {
            if *jj != 1.0 {
                scaled.column_mut(j).scale_mut(*jj);
            }
        }
        let mut h = scaled * dense.transpose() / p;
        for i in 0..m {
            h[(i, i)] += 1.0 / pen;
        }
        let rhs = DVector::from_column_slice(&grad);
        let dir: Vec<f64> = match h.cholesky() {
            Some(ch) => ch.solve(&rhs).as_slice().to_vec(),
            None => grad.clone(),
        };
        let slope = dot(&grad, &dir);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = lincomb(1.0, &u, step, &dir);
            let (tv, tg, tx, tw) = evaluate(&trial);
            if tv >= value + 1e-4 * step * slope || (tv - value).abs() <= 1e-15 * value.abs().max(1.0) {
                u = trial;
                value = tv;
                grad = tg;
                x = tx;
                w = tw;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    ws.dual = Some(u);
    ws.dense = Some(dense);
    match result {
        Some((iterations, residual)) => Ok(InnerSolution {
            x,
            iterations,
            residual,
            method: InnerMethod::DualNewton,
        }),
        None => {
            // fall back to the first-order path from the Newton estimate
            ws.x = Some(x);
            prox_gradient(sp, tol, max_iter.max(1000), ws)
        }
    }
}
