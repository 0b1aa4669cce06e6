//! Momentum sequence and the explicit parameter schedules of the three
//! accelerated methods, with a validator for the GLADMM step conditions.

use std::fmt;

use crate::error::{Error, Result};

/// Relative slack used when comparing schedule quantities that are equal in
/// exact arithmetic.
const SCHEDULE_SLACK: f64 = 1e-12;

/// `t_k = (1 + √(1 + 4 t_{k−1}²)) / 2`
pub fn next_t(t_prev: f64) -> f64 {
    debug_assert!(t_prev >= 0.0);
    (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt()) / 2.0
}

/// Iterator over `(k, t_k)` for `k = 1, 2, ...`, starting from `t_0 = 0`.
#[derive(Clone, Debug, Default)]
pub struct MomentumSequence {
    t: f64,
    k: usize,
}

impl MomentumSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current `(k, t_k)`; `(0, 0.0)` before the first step.
    pub fn current(&self) -> (usize, f64) {
        (self.k, self.t)
    }
}

impl Iterator for MomentumSequence {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<Self::Item> {
        self.t = next_t(self.t);
        self.k += 1;
        Some((self.k, self.t))
    }
}

/// GPGM step constants: `α ∈ (0, 1]`, `γ` with `α γ ≥ L`, `τ_k = γ θ_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpgmParams {
    pub lipschitz: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl GpgmParams {
    /// `γ = L / α`.
    pub fn new(lipschitz: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(lipschitz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "GPGM needs L > 0 to derive γ = L/α, got {lipschitz}"
            )));
        }
        Ok(Self {
            lipschitz,
            alpha,
            gamma: lipschitz / alpha,
        })
    }

    /// Explicit `γ`; rejected when `α γ < L`.
    pub fn with_gamma(lipschitz: f64, alpha: f64, gamma: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("γ must be positive, got {gamma}")));
        }
        if alpha * gamma < lipschitz * (1.0 - SCHEDULE_SLACK) {
            return Err(Error::InvalidArgument(format!(
                "α γ = {} is below L = {lipschitz}; need γ ≥ L/α",
                alpha * gamma
            )));
        }
        Ok(Self {
            lipschitz,
            alpha,
            gamma,
        })
    }

    /// `(θ_k, τ_k)` for momentum value `t_k`.
    pub fn step(&self, t_k: f64) -> (f64, f64) {
        let theta = 1.0 / t_k;
        (theta, self.gamma * theta)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("α must lie in (0, 1], got {alpha}")))
    }
}

/// GLALM per-iteration parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlalmStep {
    pub k: usize,
    pub theta: f64,
    /// Dual step `γ_k = k γ`.
    pub gamma_k: f64,
    /// Penalty `κ_k = κ γ k / 2`.
    pub kappa_k: f64,
    /// Proximal weight, `P^k = p_k I` with `p_k = η / k`.
    pub p_k: f64,
}

/// `θ_k = 2/(k+1)`, `γ_k = kγ`, `κ_k = κγk/2`, `P^k = (η/k) I`.
pub fn glalm_schedule(k: usize, gamma: f64, kappa: f64, eta: f64) -> Result<GlalmStep> {
    GlalmSchedule::new(gamma, kappa, eta)?.at(k)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlalmSchedule {
    pub gamma: f64,
    pub kappa: f64,
    pub eta: f64,
}

impl GlalmSchedule {
    pub fn new(gamma: f64, kappa: f64, eta: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(eta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "GLALM needs γ > 0 and η > 0, got γ = {gamma}, η = {eta}"
            )));
        }
        if !(1.0..2.0).contains(&kappa) {
            return Err(Error::InvalidArgument(format!("κ must lie in [1, 2), got {kappa}")));
        }
        Ok(Self { gamma, kappa, eta })
    }

    /// `κ = 1`: the dual extrapolation is switched off (ALALM parameter set).
    pub fn is_reduction_mode(&self) -> bool {
        self.kappa == 1.0
    }

    pub fn at(&self, k: usize) -> Result<GlalmStep> {
        if k == 0 {
            return Err(Error::InvalidArgument("iteration index starts at 1".into()));
        }
        let kf = k as f64;
        Ok(GlalmStep {
            k,
            theta: 2.0 / (kf + 1.0),
            gamma_k: kf * self.gamma,
            kappa_k: self.kappa * self.gamma * kf / 2.0,
            p_k: self.eta / kf,
        })
    }
}

/// GLADMM per-iteration parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GladmmStep {
    pub k: usize,
    pub theta: f64,
    /// Aggregation weight `Γ_k = 2/(k(k+1))`.
    pub big_gamma: f64,
    pub lambda: f64,
    pub tau: f64,
    /// Dual step `γ_k`.
    pub gamma_k: f64,
    pub eta: f64,
    pub xi: f64,
}

/// Horizon-dependent GLADMM schedule:
/// `θ_k = 2/(k+1)`, `Γ_k = 2/(k(k+1))`, `λ_k = τ_k = γN/k`,
/// `γ_k = (2−ξ)γk/(κN)`, `η_k = 2L/(αk)`, `ξ_k = ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GladmmSchedule {
    pub horizon: usize,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub xi: f64,
    pub lipschitz: f64,
}

impl GladmmSchedule {
    /// Accepts `α, β ∈ (0, 1]`, `κ ≥ 1` and `ξ ∈ [1.5, 2)`; the boundary
    /// values `α = β = κ = 1` give the unaccelerated-extrapolation reduction.
    pub fn new(
        horizon: usize,
        alpha: f64,
        beta: f64,
        kappa: f64,
        gamma: f64,
        xi: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon N must be positive".into()));
        }
        check_alpha(alpha)?;
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidArgument(format!("β must lie in (0, 1], got {beta}")));
        }
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!("κ must be at least 1, got {kappa}")));
        }
        if !(1.5..2.0).contains(&xi) {
            return Err(Error::InvalidArgument(format!("ξ must lie in [1.5, 2), got {xi}")));
        }
        if !(gamma > 0.0) || !(lipschitz >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need γ > 0 and L ≥ 0, got γ = {gamma}, L = {lipschitz}"
            )));
        }
        Ok(Self {
            horizon,
            alpha,
            beta,
            kappa,
            gamma,
            xi,
            lipschitz,
        })
    }

    /// Default `β = 1/ξ`.
    pub fn with_default_beta(
        horizon: usize,
        alpha: f64,
        kappa: f64,
        gamma: f64,
        xi: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        Self::new(horizon, alpha, 1.0 / xi, kappa, gamma, xi, lipschitz)
    }

    pub fn is_reduction(&self) -> bool {
        self.alpha == 1.0 && self.beta == 1.0 && self.kappa == 1.0
    }

    pub fn at(&self, k: usize) -> Result<GladmmStep> {
        if k == 0 {
            return Err(Error::InvalidArgument("iteration index starts at 1".into()));
        }
        if k > self.horizon {
            return Err(Error::HorizonExceeded {
                k,
                horizon: self.horizon,
            });
        }
        let kf = k as f64;
        let nf = self.horizon as f64;
        let lambda = self.gamma * nf / kf;
        Ok(GladmmStep {
            k,
            theta: 2.0 / (kf + 1.0),
            big_gamma: 2.0 / (kf * (kf + 1.0)),
            lambda,
            tau: lambda,
            gamma_k: (2.0 - self.xi) * self.gamma * kf / (self.kappa * nf),
            eta: 2.0 * self.lipschitz / (self.alpha * kf),
            xi: self.xi,
        })
    }

    pub fn steps(&self) -> Vec<GladmmStep> {
        (1..=self.horizon)
            .map(|k| self.at(k).expect("k within horizon"))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepCondition {
    /// `L θ_k / η_k ≤ α`
    PrimalStep,
    /// `1/ξ_k ≤ β`
    XiBeta,
    /// `(τ_k + (1−ξ_k) λ_k) / γ_k ≥ κ`
    DualStep,
}

impl fmt::Display for StepCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StepCondition::PrimalStep => "L·θ_k/η_k ≤ α",
            StepCondition::XiBeta => "1/ξ_k ≤ β",
            StepCondition::DualStep => "(τ_k+(1−ξ_k)λ_k)/γ_k ≥ κ",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub k: usize,
    pub condition: StepCondition,
    /// Left-hand side of the violated inequality.
    pub value: f64,
    /// Right-hand side.
    pub limit: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={}: {} fails ({} vs {})",
            self.k, self.condition, self.value, self.limit
        )
    }
}

/// Checks the three GLADMM step conditions on a realized schedule.
pub fn validate_steps(
    lipschitz: f64,
    alpha: f64,
    beta: f64,
    kappa: f64,
    steps: &[GladmmStep],
) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in steps {
        let primal = if lipschitz == 0.0 { 0.0 } else { lipschitz * s.theta / s.eta };
        if primal > alpha * (1.0 + SCHEDULE_SLACK) {
            out.push(Violation {
                k: s.k,
                condition: StepCondition::PrimalStep,
                value: primal,
                limit: alpha,
            });
        }
        let inv_xi = 1.0 / s.xi;
        if inv_xi > beta * (1.0 + SCHEDULE_SLACK) {
            out.push(Violation {
                k: s.k,
                condition: StepCondition::XiBeta,
                value: inv_xi,
                limit: beta,
            });
        }
        let dual = (s.tau + (1.0 - s.xi) * s.lambda) / s.gamma_k;
        if dual < kappa * (1.0 - SCHEDULE_SLACK) {
            out.push(Violation {
                k: s.k,
                condition: StepCondition::DualStep,
                value: dual,
                limit: kappa,
            });
        }
    }
    out
}

/// Validates the schedule's own steps against `β` (which the schedule
/// formulas do not pin down).
pub fn validate_gladmm(schedule: &GladmmSchedule, beta: f64) -> Vec<Violation> {
    validate_steps(
        schedule.lipschitz,
        schedule.alpha,
        beta,
        schedule.kappa,
        &schedule.steps(),
    )
}
