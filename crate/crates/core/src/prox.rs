//! Closed-form proximal maps.
//!
//! Throughout, the proximal map of `g` with weight `tau` is
//! `prox(v, tau) = argmin_x g(x) + tau/2 ‖x − v‖²`, so shrinkage
//! thresholds scale as `weight / tau`.

use crate::error::{Error, Result};
use crate::linalg::norm;

/// Value and proximal map of a closed convex function `g`.
pub trait ProxOracle: Send + Sync {
    /// `g(x)`; `f64::INFINITY` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    fn prox(&self, v: &[f64], tau: f64) -> Vec<f64>;

    /// Diagonal of a generalized Jacobian of `v ↦ prox(v, tau)` when the map
    /// is separable with 0/1 derivative, `None` otherwise.
    fn prox_jacobian_diag(&self, _v: &[f64], _tau: f64) -> Option<Vec<f64>> {
        None
    }

    fn name(&self) -> String;
}

/// `sign(vᵢ) · max(|vᵢ| − mu, 0)`
pub fn soft_threshold(v: &[f64], mu: f64) -> Result<Vec<f64>> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be nonnegative, got {mu}")));
    }
    Ok(v.iter().map(|x| shrink_scalar(*x, mu)).collect())
}

fn shrink_scalar(x: f64, mu: f64) -> f64 {
    if x > mu {
        x - mu
    } else if x < -mu {
        x + mu
    } else {
        0.0
    }
}

/// Block shrinkage over contiguous groups of `group_size` entries.
pub fn group_soft_threshold(v: &[f64], group_size: usize, mu: f64) -> Result<Vec<f64>> {
    if group_size == 0 {
        return Err(Error::InvalidArgument("group size must be positive".into()));
    }
    if !v.len().is_multiple_of(group_size) {
        return Err(Error::InvalidArgument(format!(
            "length {} is not divisible by group size {group_size}",
            v.len()
        )));
    }
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be nonnegative, got {mu}")));
    }
    let mut out = vec![0.0; v.len()];
    for (src, dst) in v.chunks(group_size).zip(out.chunks_mut(group_size)) {
        let nrm = norm(src);
        if nrm == 0.0 {
            continue;
        }
        let s = (1.0 - mu / nrm).max(0.0);
        if s > 0.0 {
            for (d, x) in dst.iter_mut().zip(src) {
                *d = s * x;
            }
        }
    }
    Ok(out)
}

pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

/// `g = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl ProxOracle for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn prox(&self, v: &[f64], _tau: f64) -> Vec<f64> {
        v.to_vec()
    }
    fn prox_jacobian_diag(&self, v: &[f64], _tau: f64) -> Option<Vec<f64>> {
        Some(vec![1.0; v.len()])
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

/// `weight · ‖x_{0..len−free_tail}‖₁`; the last `free_tail` entries are
/// unpenalized (e.g. an intercept).
#[derive(Clone, Copy, Debug)]
pub struct L1Norm {
    pub weight: f64,
    pub free_tail: usize,
}

impl L1Norm {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument(format!("l1 weight must be nonnegative, got {weight}")));
        }
        Ok(Self { weight, free_tail: 0 })
    }

    pub fn with_free_tail(mut self, free_tail: usize) -> Self {
        self.free_tail = free_tail;
        self
    }

    fn penalized(&self, len: usize) -> usize {
        len.saturating_sub(self.free_tail)
    }
}

impl ProxOracle for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        let p = self.penalized(x.len());
        self.weight * x[..p].iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, v: &[f64], tau: f64) -> Vec<f64> {
        let p = self.penalized(v.len());
        let mu = self.weight / tau;
        v.iter()
            .enumerate()
            .map(|(i, x)| if i < p { shrink_scalar(*x, mu) } else { *x })
            .collect()
    }

    fn prox_jacobian_diag(&self, v: &[f64], tau: f64) -> Option<Vec<f64>> {
        let p = self.penalized(v.len());
        let mu = self.weight / tau;
        Some(
            v.iter()
                .enumerate()
                .map(|(i, x)| if i >= p || x.abs() > mu { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    fn name(&self) -> String {
        format!("l1(weight={})", self.weight)
    }
}

/// Indicator of `{x : xᵢ ≥ bound}`.
#[derive(Clone, Copy, Debug)]
pub struct LowerBound {
    pub bound: f64,
}

impl LowerBound {
    pub fn new(bound: f64) -> Self {
        Self { bound }
    }

    pub fn nonneg() -> Self {
        Self { bound: 0.0 }
    }

    fn slack(&self) -> f64 {
        1e-12 * self.bound.abs().max(1.0)
    }
}

impl ProxOracle for LowerBound {
    fn value(&self, x: &[f64]) -> f64 {
        // Convex combinations of feasible points may round just below the bound.
        let floor = self.bound - self.slack();
        if x.iter().all(|v| *v >= floor) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, v: &[f64], _tau: f64) -> Vec<f64> {
        if self.bound == 0.0 {
            project_nonneg(v)
        } else {
            v.iter().map(|x| x.max(self.bound)).collect()
        }
    }

    fn prox_jacobian_diag(&self, v: &[f64], _tau: f64) -> Option<Vec<f64>> {
        Some(v.iter().map(|x| if *x > self.bound { 1.0 } else { 0.0 }).collect())
    }

    fn name(&self) -> String {
        if self.bound == 0.0 {
            "nonneg".into()
        } else {
            format!("lower_bound({})", self.bound)
        }
    }
}

/// `weight · Σ_groups ‖x_group‖₂` over contiguous groups.
#[derive(Clone, Copy, Debug)]
pub struct GroupL21 {
    pub weight: f64,
    pub group_size: usize,
}

impl GroupL21 {
    pub fn new(weight: f64, group_size: usize) -> Result<Self> {
        if !(weight >= 0.0) || group_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "group norm needs weight >= 0 and group size > 0, got ({weight}, {group_size})"
            )));
        }
        Ok(Self { weight, group_size })
    }
}

impl ProxOracle for GroupL21 {
    fn value(&self, x: &[f64]) -> f64 {
        self.weight * x.chunks(self.group_size).map(norm).sum::<f64>()
    }

    fn prox(&self, v: &[f64], tau: f64) -> Vec<f64> {
        group_soft_threshold(v, self.group_size, self.weight / tau)
            .expect("group length checked by the caller's problem dimensions")
    }

    fn name(&self) -> String {
        format!("l21(weight={}, group={})", self.weight, self.group_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0, -0.5, 0.0], 1.0).unwrap(), vec![2.0, 0.0, 0.0]);
        let v = [1.5, -2.0, 0.25];
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v.to_vec());
        assert_eq!(soft_threshold(&[1.25], 1.25).unwrap(), vec![0.0]);
        assert!(soft_threshold(&[1.0], -0.1).is_err());
    }

    #[test]
    fn group_soft_threshold_examples() {
        assert_eq!(group_soft_threshold(&[3.0, 4.0], 2, 5.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(group_soft_threshold(&[3.0, 4.0], 2, 2.5).unwrap(), vec![1.5, 2.0]);
        let v = [1.0, -2.0, 0.0, 0.0];
        assert_eq!(group_soft_threshold(&v, 2, 0.0).unwrap(), v.to_vec());
        assert!(group_soft_threshold(&[1.0, 2.0, 3.0], 2, 1.0).is_err());
        assert!(group_soft_threshold(&[1.0, 2.0], 0, 1.0).is_err());
    }

    #[test]
    fn zero_group_maps_to_zero() {
        assert_eq!(group_soft_threshold(&[0.0, 0.0, 1.0, 0.0], 2, 0.5).unwrap(), vec![0.0, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn nonneg_projection_examples() {
        assert_eq!(project_nonneg(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(project_nonneg(&[0.0, 3.0, 1e-9]), vec![0.0, 3.0, 1e-9]);
        assert_eq!(project_nonneg(&[-3.0, -0.1, 5.0, 0.0]), vec![0.0, 0.0, 5.0, 0.0]);
    }

    #[test]
    fn l1_with_free_intercept() {
        let g = L1Norm::new(2.0).unwrap().with_free_tail(1);
        assert_eq!(g.value(&[1.0, -1.0, 100.0]), 4.0);
        // tau = 4 -> threshold 0.5; the intercept passes through
        assert_eq!(g.prox(&[1.0, -0.25, -7.0], 4.0), vec![0.5, 0.0, -7.0]);
    }

    #[test]
    fn lower_bound_indicator() {
        let g = LowerBound::new(0.8);
        assert_eq!(g.prox(&[0.0, 1.0], 3.0), vec![0.8, 1.0]);
        assert_eq!(g.value(&[0.8, 2.0]), 0.0);
        assert!(g.value(&[0.7]).is_infinite());
    }
}
