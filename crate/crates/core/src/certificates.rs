//! Rate bounds, gap function, perturbation conversions and the certificate
//! report that compares them against measured iterates.

use std::io::Write;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist_sq, dot, norm, norm_sq, sub, LinearOperator};
use crate::problems::TwoBlockProblem;

/// Absolute residuals of the four quadratic identities
///
/// 1. `(2−t)(‖a+b‖² − ‖a‖² − (1−t)‖b‖²) = ‖a+b‖² − ‖a−(1−t)b‖²`
/// 2. `t(‖a+b‖² − ‖a‖² − (t−1)‖b‖²) = ‖a+b‖² − ‖a−(t−1)b‖²`
/// 3. `t(t−1)‖a‖² + t‖b‖² = ‖(t−1)a + b‖² + (t−1)‖a−b‖²`
/// 4. `2⟨a−b, c−d⟩ = ‖a−d‖² − ‖a−c‖² + ‖b−c‖² − ‖b−d‖²`
pub fn identity_residuals(a: &[f64], b: &[f64], c: &[f64], d: &[f64], t: f64) -> Result<[f64; 4]> {
    let n = a.len();
    check_dim("identity b", n, b.len())?;
    check_dim("identity c", n, c.len())?;
    check_dim("identity d", n, d.len())?;
    let comb = |s: f64, u: &[f64], r: f64, v: &[f64]| -> f64 {
        u.iter().zip(v).map(|(x, y)| (s * x + r * y).powi(2)).sum()
    };
    let ab = comb(1.0, a, 1.0, b);
    let na = norm_sq(a);
    let nb = norm_sq(b);

    let r1 = (2.0 - t) * (ab - na - (1.0 - t) * nb) - (ab - comb(1.0, a, -(1.0 - t), b));
    let r2 = t * (ab - na - (t - 1.0) * nb) - (ab - comb(1.0, a, -(t - 1.0), b));
    let r3 = t * (t - 1.0) * na + t * nb - (comb(t - 1.0, a, 1.0, b) + (t - 1.0) * dist_sq(a, b));
    let r4 = 2.0 * dot(&sub(a, b), &sub(c, d))
        - (dist_sq(a, d) - dist_sq(a, c) + dist_sq(b, c) - dist_sq(b, d));
    Ok([r1.abs(), r2.abs(), r3.abs(), r4.abs()])
}

/// Magnitude against which identity residuals are judged:
/// `(1 + t²)(1 + max(‖a‖, ‖b‖, ‖c‖, ‖d‖)²)`.
pub fn identity_scale(a: &[f64], b: &[f64], c: &[f64], d: &[f64], t: f64) -> f64 {
    let m = [norm(a), norm(b), norm(c), norm(d)].into_iter().fold(0.0_f64, f64::max);
    (1.0 + t * t) * (1.0 + m * m)
}

/// `2γ/((2−α)(k+1)²) · (‖x̂¹ − x*‖² − ‖x̂^{k+1} − x*‖²)`. A negative value is
/// returned as is.
pub fn gpgm_bound(k: usize, gamma: f64, alpha: f64, xhat1: &[f64], xhat_next: &[f64], x_star: &[f64]) -> f64 {
    gpgm_bound_from_dists(k, gamma, alpha, dist_sq(xhat1, x_star), dist_sq(xhat_next, x_star))
}

pub fn gpgm_bound_from_dists(k: usize, gamma: f64, alpha: f64, d1_sq: f64, dk_sq: f64) -> f64 {
    let kp = (k + 1) as f64;
    2.0 * gamma / ((2.0 - alpha) * kp * kp) * (d1_sq - dk_sq)
}

/// Rate-table form `2γ/(2−α) · ‖x¹ − x*‖²/(k+1)²`, without the negative term.
pub fn gpgm_table_bound(k: usize, gamma: f64, alpha: f64, d1_sq: f64) -> f64 {
    gpgm_bound_from_dists(k, gamma, alpha, d1_sq, 0.0)
}

/// Right-hand side of `t_k²(F(x_ag^{k+1}) − F*) ≤ γ/(2(2−α))(‖x̂¹−x*‖² − ‖x̂^{k+1}−x*‖²)`.
/// With `α = 1`, `γ = L` and `x̂ = x` this is the accelerated proximal
/// gradient bound `L/2 (‖x¹−x*‖² − ‖x^{k+1}−x*‖²)`.
pub fn gpgm_bound_numerator(gamma: f64, alpha: f64, d1_sq: f64, dk_sq: f64) -> f64 {
    gamma / (2.0 * (2.0 - alpha)) * (d1_sq - dk_sq)
}

/// `ρ = max{1 + ‖z*‖, 2‖z*‖}`.
pub fn rho_for(z_norm: f64) -> f64 {
    (1.0 + z_norm).max(2.0 * z_norm)
}

/// `(1/(k(k+1))) (η/(2−α)‖x¹ − x*‖² + max{(1+‖z*‖)², 4‖z*‖²}/(γκ))`.
#[allow(clippy::too_many_arguments)]
pub fn glalm_bound(
    k: usize,
    eta: f64,
    alpha: f64,
    gamma: f64,
    kappa: f64,
    x1: &[f64],
    x_star: &[f64],
    z_star: &[f64],
) -> f64 {
    glalm_bound_from_dists(k, eta, alpha, gamma, kappa, dist_sq(x1, x_star), norm(z_star))
}

pub fn glalm_bound_from_dists(
    k: usize,
    eta: f64,
    alpha: f64,
    gamma: f64,
    kappa: f64,
    x1_dist_sq: f64,
    z_norm: f64,
) -> f64 {
    let kf = k as f64;
    let rho = rho_for(z_norm);
    (eta / (2.0 - alpha) * x1_dist_sq + rho * rho / (gamma * kappa)) / (kf * (kf + 1.0))
}

/// `η/(2−α)(‖x̂¹−x*‖² − ‖x̂^{k+1}−x*‖²) + (‖ẑ¹−z‖² − ‖ẑ^{k+1}−z‖²)/(κγ)`.
pub fn glalm_bound_numerator(
    eta: f64,
    alpha: f64,
    kappa: f64,
    gamma: f64,
    x_dists: (f64, f64),
    z_dists: (f64, f64),
) -> f64 {
    eta / (2.0 - alpha) * (x_dists.0 - x_dists.1) + (z_dists.0 - z_dists.1) / (kappa * gamma)
}

/// Scalar inputs of the two-block rate bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GladmmBoundInputs {
    pub horizon: usize,
    pub lipschitz: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub xi: f64,
    /// `‖x¹ − x*‖²`
    pub x_dist_sq: f64,
    /// `‖By¹ − By*‖²`
    pub by_dist_sq: f64,
    pub z_star_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GladmmBoundTerms {
    /// `2L‖x¹−x*‖²/(α(2−α)N(N−1))`, the `O(1/N²)` part.
    pub primal: f64,
    /// `κ max{(1+‖z*‖)², 4‖z*‖²}/(γ(2−ξ)(N−1))`
    pub dual: f64,
    /// `2γ‖By¹−By*‖²/((2−β)(N−1))`
    pub coupling: f64,
}

impl GladmmBoundTerms {
    pub fn total(&self) -> f64 {
        self.primal + self.dual + self.coupling
    }
}

/// Bound at the aggregated iterate after step `k ≤ N`:
/// `2L d_x/(α(2−α)k(k+1)) + κNρ²/(γ(2−ξ)k(k+1)) + 2γN d_y/((2−β)k(k+1))`.
/// At `k = N − 1` this is the horizon bound.
pub fn gladmm_bound_at(inputs: &GladmmBoundInputs, k: usize) -> Result<GladmmBoundTerms> {
    let n = inputs.horizon;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("step {k} outside 1..={n}")));
    }
    let kf = k as f64;
    let nf = n as f64;
    let denom = kf * (kf + 1.0);
    let rho = rho_for(inputs.z_star_norm);
    Ok(GladmmBoundTerms {
        primal: 2.0 * inputs.lipschitz * inputs.x_dist_sq / (inputs.alpha * (2.0 - inputs.alpha) * denom),
        dual: inputs.kappa * nf * rho * rho / (inputs.gamma * (2.0 - inputs.xi) * denom),
        coupling: 2.0 * inputs.gamma * nf * inputs.by_dist_sq / ((2.0 - inputs.beta) * denom),
    })
}

/// Horizon bound on `|F(w_ag^N) − F*|` and `‖By_ag^N − Ax_ag^N − b‖`.
#[allow(clippy::too_many_arguments)]
pub fn gladmm_bound(
    horizon: usize,
    lipschitz: f64,
    alpha: f64,
    beta: f64,
    kappa: f64,
    gamma: f64,
    xi: f64,
    x1: &[f64],
    y1: &[f64],
    x_star: &[f64],
    y_star: &[f64],
    z_star: &[f64],
    b_op: &dyn LinearOperator,
) -> Result<GladmmBoundTerms> {
    if horizon < 2 {
        return Err(Error::InvalidArgument(format!("horizon must be at least 2, got {horizon}")));
    }
    let inputs = GladmmBoundInputs {
        horizon,
        lipschitz,
        alpha,
        beta,
        kappa,
        gamma,
        xi,
        x_dist_sq: dist_sq(x1, x_star),
        by_dist_sq: dist_sq(&b_op.apply(y1), &b_op.apply(y_star)),
        z_star_norm: norm(z_star),
    };
    gladmm_bound_at(&inputs, horizon - 1)
}

/// `Q(w̃; w) = [f(x) + g(y) − ⟨z̃, By − Ax − b⟩] − [f(x̃) + g(ỹ) − ⟨z, Bỹ − Ax̃ − b⟩]`.
pub fn gap_q(
    xt: &[f64],
    yt: &[f64],
    zt: &[f64],
    x: &[f64],
    y: &[f64],
    z: &[f64],
    problem: &TwoBlockProblem,
) -> f64 {
    let left = problem.objective(x, y) - dot(zt, &problem.residual(x, y));
    let right = problem.objective(xt, yt) - dot(z, &problem.residual(xt, yt));
    left - right
}

/// `(ε/(ρ−‖z*‖), −‖z*‖ε/(ρ−‖z*‖), ε)`: feasibility bound and the lower and
/// upper objective-gap bounds.
pub fn rho_convert(eps: f64, rho: f64, z_norm: f64) -> Result<(f64, f64, f64)> {
    if !(rho > z_norm) {
        return Err(Error::InvalidArgument(format!("need ρ > ‖z*‖, got ρ = {rho}, ‖z*‖ = {z_norm}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be nonnegative, got {eps}")));
    }
    let d = rho - z_norm;
    Ok((eps / d, -z_norm * eps / d, eps))
}

/// Tolerance `abs + rel · |bound|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn allowance(&self, bound: f64) -> f64 {
        self.abs + self.rel * bound.abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateRow {
    pub k: usize,
    pub measured: f64,
    pub bound: f64,
    /// `bound − measured`
    pub slack: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub rows: Vec<CertificateRow>,
    pub tolerance: Tolerance,
}

impl CertificateReport {
    pub fn from_pairs<I>(pairs: I, tolerance: Tolerance) -> Self
    where
        I: IntoIterator<Item = (usize, f64, f64)>,
    {
        let rows = pairs
            .into_iter()
            .map(|(k, measured, bound)| CertificateRow {
                k,
                measured,
                bound,
                slack: bound - measured,
                violated: !(measured <= bound + tolerance.allowance(bound)),
            })
            .collect();
        Self { rows, tolerance }
    }

    pub fn violations(&self) -> impl Iterator<Item = &CertificateRow> {
        self.rows.iter().filter(|r| r.violated)
    }

    pub fn violation_count(&self) -> usize {
        self.violations().count()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0
    }

    /// Rows whose bound is negative (possible for the extrapolated-distance
    /// form when `x̂` drifts away from the reference).
    pub fn negative_bounds(&self) -> impl Iterator<Item = &CertificateRow> {
        self.rows.iter().filter(|r| r.bound < 0.0)
    }

    pub fn worst_slack(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.slack).reduce(f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,measured,bound,slack,violated")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.k, r.measured, r.bound, r.slack, r.violated)?;
        }
        Ok(())
    }
}

/// Indices `i ≥ 1` with `values[i] > values[i−1] + tol`.
pub fn increases(values: &[f64], tol: f64) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + tol)
        .map(|(i, _)| i + 1)
        .collect()
}
