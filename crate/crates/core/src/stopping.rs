//! Stopping rules shared by the iterative solvers.

use crate::linalg::{dot, norm};
use crate::problems::{CompositeProblem, Logistic};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StoppingRule {
    MaxIters(usize),
    /// `|F_k − F_{k−window}| ≤ tol · max(1, |F_k|)`, capped at `max_iters`.
    Stagnation {
        tol: f64,
        window: usize,
        max_iters: usize,
    },
    /// Relative duality gap and intercept-feasibility test for ℓ1-regularized
    /// logistic regression with weight `lambda`.
    LogisticDualGap {
        tol: f64,
        lambda: f64,
        max_iters: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Stagnation,
    DualGap,
}

impl StoppingRule {
    pub fn stagnation(tol: f64, max_iters: usize) -> Self {
        StoppingRule::Stagnation {
            tol,
            window: 10,
            max_iters,
        }
    }

    pub fn max_iters(&self) -> usize {
        match *self {
            StoppingRule::MaxIters(n) => n,
            StoppingRule::Stagnation { max_iters, .. } => max_iters,
            StoppingRule::LogisticDualGap { max_iters, .. } => max_iters,
        }
    }

    /// `objectives[i]` is the objective after step `i + 1`.
    pub(crate) fn check_objectives(&self, objectives: &[f64]) -> Option<StopReason> {
        if let StoppingRule::Stagnation { tol, window, .. } = *self {
            let k = objectives.len();
            if window > 0 && k > window {
                let now = objectives[k - 1];
                let then = objectives[k - 1 - window];
                if (now - then).abs() <= tol * now.abs().max(1.0) {
                    return Some(StopReason::Stagnation);
                }
            }
        }
        None
    }

    pub(crate) fn check_composite(&self, problem: &CompositeProblem, x: &[f64]) -> Option<StopReason> {
        if let StoppingRule::LogisticDualGap { tol, lambda, .. } = *self {
            if let Some(loss) = problem.f.as_logistic() {
                if logistic_dual_criterion(loss, lambda, x) <= tol {
                    return Some(StopReason::DualGap);
                }
            }
        }
        None
    }
}

fn entropy(u: f64) -> f64 {
    let a = if u > 0.0 { u * u.ln() } else { 0.0 };
    let b = if u < 1.0 { (1.0 - u) * (1.0 - u).ln() } else { 0.0 };
    -(a + b)
}

/// `max{ |F(x) − G(u)| / max(F(x), 1), 50 |Σ bᵢuᵢ| / max(‖u‖, 1) }` where
/// `uᵢ = σ(−sᵢ)` is scaled so that `‖Ãᵀ(b∘u)‖_∞ ≤ λ`, and `G(u)` is the
/// entropy dual objective.
pub fn logistic_dual_criterion(loss: &Logistic, lambda: f64, x: &[f64]) -> f64 {
    use crate::linalg::LinearOperator;
    let margins = loss.margins(x);
    let labels = loss.labels();
    let mut u: Vec<f64> = margins.iter().map(|s| crate::problems::sigmoid_neg(*s)).collect();
    let bu: Vec<f64> = u.iter().zip(labels).map(|(ui, bi)| ui * bi).collect();
    let corr = loss.features().apply_adjoint(&bu);
    let inf = corr.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if inf > lambda {
        let s = lambda / inf;
        u.iter_mut().for_each(|v| *v *= s);
    }
    let n = loss.features().cols();
    let primal = margins.iter().map(|s| crate::problems::log1p_exp_neg(*s)).sum::<f64>()
        + lambda * x[..n].iter().map(|v| v.abs()).sum::<f64>();
    let dual: f64 = u.iter().map(|v| entropy(*v)).sum();
    let intercept = dot(&u, labels);
    let gap = (primal - dual).abs() / primal.max(1.0);
    let feas = 50.0 * intercept.abs() / norm(&u).max(1.0);
    gap.max(feas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stagnation_window() {
        let rule = StoppingRule::stagnation(1e-6, 100);
        let mut objs: Vec<f64> = (0..10).map(|i| 1.0 / (i + 1) as f64).collect();
        assert_eq!(rule.check_objectives(&objs), None);
        objs.extend(std::iter::repeat_n(0.1, 11));
        assert_eq!(rule.check_objectives(&objs), Some(StopReason::Stagnation));
    }

    #[test]
    fn entropy_limits() {
        assert_eq!(entropy(0.0), 0.0);
        assert_eq!(entropy(1.0), 0.0);
        assert!((entropy(0.5) - 2f64.ln()).abs() < 1e-15);
    }
}
