//! High-accuracy reference solutions used as `(x*, F*, z*)` oracles.

use nalgebra::{DMatrix, DVector};

use super::{CompositeProblem, LinConstrainedProblem, SmoothOracle, TwoBlockProblem};
use crate::error::{Error, Result};
use crate::glalm::{GlalmConfig, GlalmState, glalm_step};
use crate::gpgm::{gpgm_step, GpgmState};
use crate::linalg::{
    axpy, cg_solve_warm, dist, lincomb, norm, sub, to_dense, DenseMatrix, LinearOperator,
};
use crate::prox::ProxOracle;
use crate::schedules::GpgmParams;
use crate::subproblem::InnerConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub x: Vec<f64>,
    pub f_star: f64,
    /// Multiplier for the Lagrangian `F − ⟨z, Ax − b⟩` (resp. `−⟨z, By − Ax − b⟩`).
    pub z: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub iterations: usize,
}

impl Reference {
    pub fn primal(x: Vec<f64>, f_star: f64) -> Self {
        Self {
            x,
            f_star,
            z: None,
            y: None,
            iterations: 0,
        }
    }

    pub fn with_dual(x: Vec<f64>, f_star: f64, z: Vec<f64>) -> Self {
        Self {
            z: Some(z),
            ..Self::primal(x, f_star)
        }
    }

    pub fn two_block(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, f_star: f64) -> Self {
        Self {
            y: Some(y),
            z: Some(z),
            ..Self::primal(x, f_star)
        }
    }

    pub fn z_norm(&self) -> Result<f64> {
        self.z
            .as_deref()
            .map(norm)
            .ok_or(Error::MissingReference("multiplier z*"))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReferenceConfig {
    /// Relative objective change over the last 100 iterations.
    pub tol: f64,
    pub budget: usize,
    /// Dual step `γ` of the warm-up run for constrained problems.
    pub penalty: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            budget: 200_000,
            penalty: 1.0,
        }
    }
}

const WINDOW: usize = 100;
const POLISH_EVERY: usize = 1000;

fn stagnated(objectives: &[f64], tol: f64) -> Option<f64> {
    let k = objectives.len();
    if k <= WINDOW {
        return None;
    }
    let now = objectives[k - 1];
    let change = (now - objectives[k - 1 - WINDOW]).abs() / now.abs().max(1.0);
    Some(change).filter(|c| *c <= tol)
}

/// Semismooth Newton refinement of `x = prox_g(x − ∇f(x)/L, L)` for a
/// twice-differentiable `f` and a prox with 0/1 Jacobian. On the rows where
/// the Jacobian vanishes the Newton step equals the residual, so only the
/// free rows need a linear solve. Returns the refined point only if its
/// fixed-point residual improves.
fn newton_polish_composite(problem: &CompositeProblem, x0: &[f64], lip: f64) -> Option<Vec<f64>> {
    let n = x0.len();
    let residual = |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let w = lincomb(1.0, x, -1.0 / lip, &problem.f.gradient(x));
        (sub(x, &problem.g.prox(&w, lip)), w)
    };
    let (mut r, mut w) = residual(x0);
    let start_norm = norm(&r);
    let mut x = x0.to_vec();
    for _ in 0..50 {
        let rn = norm(&r);
        if rn <= 1e-15 * (1.0 + norm(&x)) {
            break;
        }
        let jac = problem.g.prox_jacobian_diag(&w, lip)?;
        if jac.iter().any(|j| *j != 0.0 && *j != 1.0) {
            return None;
        }
        let h = problem.f.hessian_at(&x)?;
        let free: Vec<usize> = (0..n).filter(|&i| jac[i] == 1.0).collect();
        // free rows: (H s)_i / L = r_i, fixed rows: s_i = r_i
        let mut step = r.clone();
        if !free.is_empty() {
            let f = free.len();
            let mut m = DMatrix::<f64>::zeros(f, f);
            let mut rhs = DVector::<f64>::zeros(f);
            for (a, &i) in free.iter().enumerate() {
                let mut v = lip * r[i];
                for j in 0..n {
                    if jac[j] == 0.0 {
                        v -= h.get(i, j) * r[j];
                    }
                }
                rhs[a] = v;
                for (b, &j) in free.iter().enumerate() {
                    m[(a, b)] = h.get(i, j);
                }
            }
            let sf = m.lu().solve(&rhs)?;
            for (a, &i) in free.iter().enumerate() {
                step[i] = sf[a];
            }
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial = lincomb(1.0, &x, -t, &step);
            let (tr, tw) = residual(&trial);
            if norm(&tr) < rn {
                x = trial;
                r = tr;
                w = tw;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (norm(&r) < start_norm).then_some(x)
}

/// Restarted accelerated proximal gradient (`α = 1`, `γ = L`), stopped when
/// the relative objective change over 100 iterations is below `tol` and the
/// prox-gradient fixed-point residual is below `√tol`, followed by a Newton
/// polish when `f` has a Hessian.
pub fn reference_composite(problem: &CompositeProblem, cfg: &ReferenceConfig) -> Result<Reference> {
    let n = problem.dim();
    let lip = if problem.f.lipschitz() > 0.0 { problem.f.lipschitz() } else { 1.0 };
    let params = GpgmParams::new(lip, 1.0)?;
    let mut state = GpgmState::new(vec![0.0; n]);
    let mut prev_obj = problem.objective(&state.x_ag);
    let mut objectives = Vec::new();
    let mut change = f64::INFINITY;
    let fixed_point = |x: &[f64]| {
        let w = lincomb(1.0, x, -1.0 / lip, &problem.f.gradient(x));
        dist(x, &problem.g.prox(&w, lip))
    };

    for it in 1..=cfg.budget {
        let x_prev = state.x_ag.clone();
        gpgm_step(&mut state, problem, &params)?;
        let mut obj = problem.objective(&state.x_ag);
        if obj > prev_obj {
            // function-value restart from the previous aggregate
            state = GpgmState::new(x_prev);
            obj = prev_obj;
        }
        prev_obj = obj;
        objectives.push(obj);
        if it % POLISH_EVERY == 0 {
            // an exact active-set solve often finishes long before stagnation
            if let Some(x) = newton_polish_composite(problem, &state.x_ag, lip) {
                if fixed_point(&x) <= 1e-13 * (1.0 + crate::linalg::norm(&x)) && problem.objective(&x) <= obj {
                    let f_star = problem.objective(&x);
                    return Ok(Reference {
                        iterations: it,
                        ..Reference::primal(x, f_star)
                    });
                }
            }
        }
        if let Some(c) = stagnated(&objectives, cfg.tol) {
            change = c;
            let x = &state.x_ag;
            if fixed_point(x) <= cfg.tol.sqrt() * (1.0 + crate::linalg::norm(x)) {
                let x = newton_polish_composite(problem, x, lip).unwrap_or_else(|| x.clone());
                let f_star = problem.objective(&x);
                return Ok(Reference {
                    iterations: it,
                    ..Reference::primal(x, f_star)
                });
            }
        } else if objectives.len() > WINDOW {
            let k = objectives.len();
            change = (objectives[k - 1] - objectives[k - 1 - WINDOW]).abs()
                / objectives[k - 1].abs().max(1.0);
        }
    }
    Err(Error::ReferenceNotConverged {
        iterations: cfg.budget,
        change,
        best: state.x_ag,
    })
}

/// KKT residual `[x − prox(x − (∇f(x) − Aᵀz)/L, L); Ax − b]`.
fn kkt_residual(problem: &LinConstrainedProblem, x: &[f64], z: &[f64], lip: f64) -> (Vec<f64>, Vec<f64>) {
    let mut grad = problem.f.gradient(x);
    axpy(-1.0, &problem.a.apply_adjoint(z), &mut grad);
    let w = lincomb(1.0, x, -1.0 / lip, &grad);
    let mut r = sub(x, &problem.g.prox(&w, lip));
    r.extend(problem.residual(x));
    (r, w)
}

/// Semismooth Newton on the KKT system for quadratic `f`, dense `A` and a
/// prox with 0/1 Jacobian.
fn newton_polish_constrained(
    problem: &LinConstrainedProblem,
    x0: &[f64],
    z0: &[f64],
    lip: f64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let h = problem.f.hessian()?;
    let a = problem.a.as_dense()?;
    let (m, n) = (a.rows(), a.cols());
    let (mut x, mut z) = (x0.to_vec(), z0.to_vec());
    let (mut r, mut w) = kkt_residual(problem, &x, &z, lip);
    let start = norm(&r);
    for _ in 0..100 {
        let rn = norm(&r);
        if rn <= 1e-15 * (1.0 + norm(&x) + norm(&z)) {
            break;
        }
        let jac = problem.g.prox_jacobian_diag(&w, lip)?;
        let mut jm = DMatrix::<f64>::zeros(n + m, n + m);
        for i in 0..n {
            jm[(i, i)] = 1.0;
            if jac[i] != 0.0 {
                for j in 0..n {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    jm[(i, j)] -= jac[i] * (delta - h.get(i, j) / lip);
                }
                for l in 0..m {
                    jm[(i, n + l)] = -jac[i] * a.get(l, i) / lip;
                }
            }
        }
        for l in 0..m {
            for j in 0..n {
                jm[(n + l, j)] = a.get(l, j);
            }
        }
        let step = jm.lu().solve(&DVector::from_column_slice(&r))?;
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let xt = lincomb(1.0, &x, -t, &step.as_slice()[..n]);
            let zt = lincomb(1.0, &z, -t, &step.as_slice()[n..]);
            let (rt, wt) = kkt_residual(problem, &xt, &zt, lip);
            if norm(&rt) < rn {
                x = xt;
                z = zt;
                r = rt;
                w = wt;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (norm(&r) < start).then_some((x, z))
}

/// Long linearized augmented Lagrangian run (`α = κ = 1`), then a KKT Newton
/// polish when the problem is a dense-constraint quadratic program.
/// `z*` is the final multiplier, refined by the polish.
pub fn reference_constrained(problem: &LinConstrainedProblem, cfg: &ReferenceConfig) -> Result<Reference> {
    let n = problem.dim();
    let lip = problem.f.lipschitz();
    let eta = if lip > 0.0 { 2.0 * lip } else { 1.0 };
    let gcfg = GlalmConfig::new(lip, 1.0, 1.0, cfg.penalty, Some(eta), InnerConfig::default())?;
    let mut state = GlalmState::new(vec![0.0; n], problem.b.len());
    let mut objectives = Vec::new();
    let kkt_scale = |x: &[f64], z: &[f64]| 1.0 + norm(x) + norm(z);
    let kkt_lip = if lip > 0.0 { lip } else { 1.0 };
    let kkt_tol = cfg.tol.sqrt() * 1e-2;
    let mut change = f64::INFINITY;
    let mut ws = crate::glalm::GlalmWorkspace::new();

    let polish_or_check = |x: &[f64], z: &[f64]| -> Option<(Vec<f64>, Vec<f64>)> {
        let (x, z) = newton_polish_constrained(problem, x, z, kkt_lip)
            .unwrap_or_else(|| (x.to_vec(), z.to_vec()));
        let (r, _) = kkt_residual(problem, &x, &z, kkt_lip);
        (norm(&r) <= kkt_tol * kkt_scale(&x, &z)).then_some((x, z))
    };

    // warm-up stops early once the objective settles to a loose tolerance
    let warm_tol = cfg.tol.max(1e-9);
    for it in 1..=cfg.budget {
        glalm_step(&mut state, problem, &gcfg, &mut ws)?;
        objectives.push(problem.f.value(&state.x_ag) + problem.g.value(&state.x_ag));
        let settled = stagnated(&objectives, warm_tol).is_some();
        if settled || it % POLISH_EVERY == 0 || it == cfg.budget {
            if objectives.len() > WINDOW {
                let k = objectives.len();
                change = (objectives[k - 1] - objectives[k - 1 - WINDOW]).abs()
                    / objectives[k - 1].abs().max(1.0);
            }
            for (x, z) in [(&state.x_ag, &state.z), (&state.x, &state.z)] {
                if let Some((x, z)) = polish_or_check(x, z) {
                    let f_star = problem.objective(&x);
                    return Ok(Reference {
                        iterations: it,
                        ..Reference::with_dual(x, f_star, z)
                    });
                }
            }
            if settled && stagnated(&objectives, cfg.tol).is_some() && problem.f.hessian().is_none() {
                let x = state.x_ag.clone();
                let f_star = problem.objective(&x);
                return Ok(Reference {
                    iterations: it,
                    ..Reference::with_dual(x, f_star, state.z.clone())
                });
            }
        }
    }
    Err(Error::ReferenceNotConverged {
        iterations: cfg.budget,
        change,
        best: state.x_ag,
    })
}

/// `v ↦ ∇f(v) − ∇f(0)` for quadratic `f`, plus `ρ AᵀA`.
struct AdmmNormal<'a> {
    f: &'a dyn SmoothOracle,
    grad0: Vec<f64>,
    a: &'a dyn LinearOperator,
    rho: f64,
}

impl LinearOperator for AdmmNormal<'_> {
    fn in_dim(&self) -> usize {
        self.a.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.a.in_dim()
    }
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = sub(&self.f.gradient(v), &self.grad0);
        axpy(self.rho, &self.a.apply_adjoint(&self.a.apply(v)), &mut out);
        out
    }
    fn apply_adjoint(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v)
    }
}

const DENSE_ADMM_LIMIT: usize = 2048;

/// Exact-subproblem ADMM with residual balancing for quadratic `f` and
/// `B = I`. Returns `y* = Ax* + b` and the ADMM multiplier as `z*`.
pub fn reference_two_block(problem: &TwoBlockProblem, cfg: &ReferenceConfig) -> Result<Reference> {
    if !problem.b_op.is_identity() {
        return Err(Error::Unsupported("two-block reference requires B = I".into()));
    }
    if !problem.f.is_quadratic() {
        return Err(Error::Unsupported("two-block reference requires a quadratic f".into()));
    }
    let n = problem.x_dim();
    let mrows = problem.rhs.len();
    let a = problem.a.as_ref();
    let g: &dyn ProxOracle = problem.g.as_ref();
    let grad0 = problem.f.gradient(&vec![0.0; n]);

    let mut rho = 1.0;
    let build = |rho: f64| -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        if n > DENSE_ADMM_LIMIT {
            return None;
        }
        let op = AdmmNormal {
            f: problem.f.as_ref(),
            grad0: grad0.clone(),
            a,
            rho,
        };
        let dense: DenseMatrix = to_dense(&op);
        DMatrix::from_row_slice(n, n, dense.data()).cholesky()
    };
    let mut factor = build(rho);

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; mrows];
    let mut z = vec![0.0; mrows];
    let mut objectives = Vec::new();
    let mut change = f64::INFINITY;
    for it in 1..=cfg.budget {
        // (H + ρAᵀA) x = −∇f(0) − Aᵀz + ρAᵀ(y − b)
        let mut rhs = lincomb(rho, &sub(&y, &problem.rhs), -1.0, &z);
        rhs = a.apply_adjoint(&rhs);
        axpy(-1.0, &grad0, &mut rhs);
        x = match &factor {
            Some(ch) => ch.solve(&DVector::from_column_slice(&rhs)).as_slice().to_vec(),
            None => {
                let op = AdmmNormal {
                    f: problem.f.as_ref(),
                    grad0: grad0.clone(),
                    a,
                    rho,
                };
                cg_solve_warm(&op, &rhs, &x, 1e-14, 10 * n)?
            }
        };
        let mut axb = a.apply(&x);
        axpy(1.0, &problem.rhs, &mut axb);
        let y_prev = y;
        y = g.prox(&lincomb(1.0, &axb, 1.0 / rho, &z), rho);
        let r = sub(&y, &axb);
        axpy(-rho, &r, &mut z);

        let primal_res = norm(&r);
        let dual_res = rho * norm(&a.apply_adjoint(&sub(&y, &y_prev)));
        let obj = problem.f.value(&x) + g.value(&axb);
        objectives.push(obj);
        if objectives.len() > WINDOW {
            let k = objectives.len();
            change = (objectives[k - 1] - objectives[k - 1 - WINDOW]).abs() / obj.abs().max(1.0);
        }
        let scale = 1.0 + norm(&x) + norm(&z);
        let tight = cfg.tol.sqrt() * 1e-3 * scale;
        if change <= cfg.tol && primal_res <= tight && dual_res <= tight {
            let y_star = axb;
            let f_star = problem.f.value(&x) + g.value(&y_star);
            return Ok(Reference {
                iterations: it,
                ..Reference::two_block(x, y_star, z, f_star)
            });
        }
        if it % 50 == 0 && it <= 5000 {
            let new_rho = if primal_res > 10.0 * dual_res {
                rho * 2.0
            } else if dual_res > 10.0 * primal_res {
                rho / 2.0
            } else {
                rho
            };
            if new_rho != rho {
                rho = new_rho;
                factor = build(rho);
            }
        }
    }
    Err(Error::ReferenceNotConverged {
        iterations: cfg.budget,
        change,
        best: x,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problems::Quadratic;
    use crate::prox::{LowerBound, Zero};

    #[test]
    fn scalar_quadratic_reference() {
        let f = Quadratic::with_lipschitz(DenseMatrix::identity(1), vec![0.0], 1.0).unwrap();
        let p = CompositeProblem::new(Arc::new(f), Arc::new(Zero));
        let r = reference_composite(&p, &ReferenceConfig::default()).unwrap();
        assert!(r.x[0].abs() < 1e-12);
        assert!(r.f_star.abs() < 1e-20);
    }

    #[test]
    fn tiny_qp_reference() {
        let f = Quadratic::new(DenseMatrix::identity(2), vec![-1.0, -1.0]).unwrap();
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let p = LinConstrainedProblem::new(Arc::new(f), Arc::new(LowerBound::nonneg()), Arc::new(a), vec![1.0])
            .unwrap();
        let r = reference_constrained(&p, &ReferenceConfig::default()).unwrap();
        assert!((r.x[0] - 0.5).abs() < 1e-12 && (r.x[1] - 0.5).abs() < 1e-12);
        assert!((r.f_star + 0.75).abs() < 1e-12);
        assert!((r.z.unwrap()[0] + 0.5).abs() < 1e-10);
    }
}
