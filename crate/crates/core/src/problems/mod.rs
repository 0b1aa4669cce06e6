//! Problem models, smooth-function oracles and instance generators.

mod generators;
mod reference;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, dot, norm, power_iteration, sub, DenseMatrix, LinearOperator};
use crate::prox::ProxOracle;

pub use generators::{gen_cs_tv, gen_logistic, gen_qp, logistic_lambda_max, shepp_logan, CsInstance, LogisticInstance, QpInstance};
pub use reference::{
    reference_composite, reference_constrained, reference_two_block, Reference, ReferenceConfig,
};

pub(crate) fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Smooth convex `f` with `L`-Lipschitz gradient.
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn lipschitz(&self) -> f64;

    /// Constant Hessian of a quadratic `f`.
    fn hessian(&self) -> Option<DenseMatrix> {
        None
    }

    /// Hessian at `x`; defaults to the constant Hessian.
    fn hessian_at(&self, _x: &[f64]) -> Option<DenseMatrix> {
        self.hessian()
    }

    fn as_logistic(&self) -> Option<&Logistic> {
        None
    }

    /// True when `f` is a quadratic (constant Hessian).
    fn is_quadratic(&self) -> bool {
        false
    }

    fn name(&self) -> String;
}

/// `f = 0`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroSmooth {
    pub dim: usize,
}

impl SmoothOracle for ZeroSmooth {
    fn is_quadratic(&self) -> bool {
        true
    }

    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
    fn hessian(&self) -> Option<DenseMatrix> {
        Some(DenseMatrix::zeros(self.dim, self.dim))
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

/// `f(x) = ½ xᵀQx + cᵀx` with symmetric positive semidefinite `Q`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    q: DenseMatrix,
    c: Vec<f64>,
    lipschitz: f64,
}

impl Quadratic {
    /// `L = max(λ_max(QᵀQ), λ_max(Q))`, i.e. `max(‖Q‖², ‖Q‖)`, which is a
    /// valid gradient Lipschitz constant whatever the scale of `Q`.
    pub fn new(q: DenseMatrix, c: Vec<f64>) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(Error::InvalidArgument(format!(
                "Q must be square, got {}x{}",
                q.rows(),
                q.cols()
            )));
        }
        check_dim("linear term of quadratic", q.rows(), c.len())?;
        let sq = power_iteration(&q, 1e-12, 100_000, 0x51)?;
        let lipschitz = sq.max(sq.sqrt());
        Ok(Self { q, c, lipschitz })
    }

    pub fn with_lipschitz(q: DenseMatrix, c: Vec<f64>, lipschitz: f64) -> Result<Self> {
        check_dim("linear term of quadratic", q.rows(), c.len())?;
        Ok(Self { q, c, lipschitz })
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

impl SmoothOracle for Quadratic {
    fn is_quadratic(&self) -> bool {
        true
    }

    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.q.apply(x)) + dot(&self.c, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q.apply(x);
        g.iter_mut().zip(&self.c).for_each(|(gi, ci)| *gi += ci);
        g
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn hessian(&self) -> Option<DenseMatrix> {
        Some(self.q.clone())
    }
    fn name(&self) -> String {
        "quadratic".into()
    }
}

/// `f(x) = ½‖Dx − b‖²`, `L = λ_max(DᵀD)`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    d: DenseMatrix,
    b: Vec<f64>,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(d: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        check_dim("least-squares data", d.rows(), b.len())?;
        let lipschitz = power_iteration(&d, 1e-12, 100_000, 0x1e)?;
        Ok(Self { d, b, lipschitz })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.b
    }
}

impl SmoothOracle for LeastSquares {
    fn is_quadratic(&self) -> bool {
        true
    }

    fn dim(&self) -> usize {
        self.d.cols()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r = sub(&self.d.apply(x), &self.b);
        0.5 * dot(&r, &r)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.d.apply_adjoint(&sub(&self.d.apply(x), &self.b))
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn hessian(&self) -> Option<DenseMatrix> {
        Some(self.d.gram())
    }
    fn name(&self) -> String {
        "least_squares".into()
    }
}

/// Logistic loss `Σᵢ log(1 + exp(−bᵢ(aᵢᵀx̃ + x₀)))` over `x = (x̃, x₀)`.
/// `L = 0.25 λ_max(DᵀD)` where row `i` of `D` is `(aᵢᵀ, 1)`.
#[derive(Clone, Debug)]
pub struct Logistic {
    features: DenseMatrix,
    labels: Vec<f64>,
    lipschitz: f64,
}

impl Logistic {
    pub fn new(features: DenseMatrix, labels: Vec<f64>) -> Result<Self> {
        check_dim("logistic labels", features.rows(), labels.len())?;
        if labels.iter().any(|b| *b != 1.0 && *b != -1.0) {
            return Err(Error::InvalidArgument("labels must be ±1".into()));
        }
        let d = Self::design(&features);
        let lipschitz = 0.25 * power_iteration(&d, 1e-12, 100_000, 0x10)?;
        Ok(Self {
            features,
            labels,
            lipschitz,
        })
    }

    /// Rows `(aᵢᵀ, 1)`.
    pub fn design(features: &DenseMatrix) -> DenseMatrix {
        let (m, n) = (features.rows(), features.cols());
        let mut d = DenseMatrix::zeros(m, n + 1);
        for i in 0..m {
            for (j, v) in features.row(i).iter().enumerate() {
                d.set(i, j, *v);
            }
            d.set(i, n, 1.0);
        }
        d
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Margins `sᵢ = bᵢ(aᵢᵀx̃ + x₀)`.
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        let n = self.features.cols();
        let x0 = x[n];
        let ax = self.features.apply(&x[..n]);
        ax.iter()
            .zip(&self.labels)
            .map(|(a, b)| b * (a + x0))
            .collect()
    }
}

/// `log(1 + exp(−s))` without overflow.
pub(crate) fn log1p_exp_neg(s: f64) -> f64 {
    if s > 0.0 {
        (-s).exp().ln_1p()
    } else {
        -s + s.exp().ln_1p()
    }
}

/// `σ(−s) = 1 / (1 + exp(s))`.
pub(crate) fn sigmoid_neg(s: f64) -> f64 {
    if s > 0.0 {
        let e = (-s).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + s.exp())
    }
}

impl SmoothOracle for Logistic {
    fn dim(&self) -> usize {
        self.features.cols() + 1
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.margins(x).iter().map(|s| log1p_exp_neg(*s)).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.features.cols();
        let w: Vec<f64> = self
            .margins(x)
            .iter()
            .zip(&self.labels)
            .map(|(s, b)| -b * sigmoid_neg(*s))
            .collect();
        let mut g = self.features.apply_adjoint(&w);
        g.push(w.iter().sum());
        debug_assert_eq!(g.len(), n + 1);
        g
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn hessian_at(&self, x: &[f64]) -> Option<DenseMatrix> {
        // Dᵀ diag(σ(s)σ(−s)) D
        let n = self.features.cols();
        let mut h = DenseMatrix::zeros(n + 1, n + 1);
        for (i, s) in self.margins(x).iter().enumerate() {
            let p = sigmoid_neg(*s);
            let w = p * (1.0 - p);
            if w == 0.0 {
                continue;
            }
            let mut row = self.features.row(i).to_vec();
            row.push(1.0);
            for (a, ra) in row.iter().enumerate() {
                if *ra == 0.0 {
                    continue;
                }
                let wa = w * ra;
                for (b, rb) in row.iter().enumerate() {
                    h.set(a, b, h.get(a, b) + wa * rb);
                }
            }
        }
        Some(h)
    }
    fn as_logistic(&self) -> Option<&Logistic> {
        Some(self)
    }
    fn name(&self) -> String {
        "logistic".into()
    }
}

/// `min f(x) + g(x)`.
#[derive(Clone)]
pub struct CompositeProblem {
    pub f: Arc<dyn SmoothOracle>,
    pub g: Arc<dyn ProxOracle>,
}

impl CompositeProblem {
    pub fn new(f: Arc<dyn SmoothOracle>, g: Arc<dyn ProxOracle>) -> Self {
        Self { f, g }
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.f.value(x) + self.g.value(x)
    }
}

/// `min f(x) + g(x)  s.t.  Ax = b`.
#[derive(Clone)]
pub struct LinConstrainedProblem {
    pub f: Arc<dyn SmoothOracle>,
    pub g: Arc<dyn ProxOracle>,
    pub a: Arc<dyn LinearOperator>,
    pub b: Vec<f64>,
}

impl LinConstrainedProblem {
    pub fn new(
        f: Arc<dyn SmoothOracle>,
        g: Arc<dyn ProxOracle>,
        a: Arc<dyn LinearOperator>,
        b: Vec<f64>,
    ) -> Result<Self> {
        check_dim("constraint right-hand side", a.out_dim(), b.len())?;
        check_dim("constraint operator input", f.dim(), a.in_dim())?;
        Ok(Self { f, g, a, b })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.f.value(x) + self.g.value(x)
    }

    /// `Ax − b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        sub(&self.a.apply(x), &self.b)
    }

    pub fn feasibility(&self, x: &[f64]) -> f64 {
        norm(&self.residual(x))
    }
}

/// `min f(x) + g(y)  s.t.  By − Ax = b`.
#[derive(Clone)]
pub struct TwoBlockProblem {
    pub f: Arc<dyn SmoothOracle>,
    pub g: Arc<dyn ProxOracle>,
    pub a: Arc<dyn LinearOperator>,
    pub b_op: Arc<dyn LinearOperator>,
    pub rhs: Vec<f64>,
}

impl TwoBlockProblem {
    pub fn new(
        f: Arc<dyn SmoothOracle>,
        g: Arc<dyn ProxOracle>,
        a: Arc<dyn LinearOperator>,
        b_op: Arc<dyn LinearOperator>,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        check_dim("A output vs right-hand side", a.out_dim(), rhs.len())?;
        check_dim("B output vs right-hand side", b_op.out_dim(), rhs.len())?;
        check_dim("A input vs f", f.dim(), a.in_dim())?;
        Ok(Self { f, g, a, b_op, rhs })
    }

    pub fn x_dim(&self) -> usize {
        self.a.in_dim()
    }

    pub fn y_dim(&self) -> usize {
        self.b_op.in_dim()
    }

    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        self.f.value(x) + self.g.value(y)
    }

    /// `By − Ax − b`.
    pub fn residual(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let by = self.b_op.apply(y);
        let ax = self.a.apply(x);
        by.iter()
            .zip(&ax)
            .zip(&self.rhs)
            .map(|((u, v), w)| u - v - w)
            .collect()
    }

    pub fn feasibility(&self, x: &[f64], y: &[f64]) -> f64 {
        norm(&self.residual(x, y))
    }
}

/// Largest violation of the descent lemma
/// `f(x') ≤ f(x) + ⟨∇f(x), x'−x⟩ + L/2‖x'−x‖²` over `pairs` Gaussian pairs
/// (scaled by `radius`), relative to `max(1, |f(x')|)`. Nonpositive means
/// every pair passed.
pub fn descent_lemma_violation(f: &dyn SmoothOracle, pairs: usize, radius: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = f.dim();
    let lip = f.lipschitz();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let x: Vec<f64> = (0..n).map(|_| radius * std_normal(&mut rng)).collect();
        let xp: Vec<f64> = (0..n).map(|_| radius * std_normal(&mut rng)).collect();
        let fx = f.value(&x);
        let fxp = f.value(&xp);
        let d = sub(&xp, &x);
        let upper = fx + dot(&f.gradient(&x), &d) + 0.5 * lip * dot(&d, &d);
        let excess = (fxp - upper) / fxp.abs().max(1.0);
        worst = worst.max(excess);
    }
    worst
}

/// Largest ratio `‖∇f(u) − ∇f(v)‖ / (L‖u − v‖)` over random pairs.
pub fn lipschitz_ratio(f: &dyn SmoothOracle, pairs: usize, radius: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = f.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let u: Vec<f64> = (0..n).map(|_| radius * std_normal(&mut rng)).collect();
        let v: Vec<f64> = (0..n).map(|_| radius * std_normal(&mut rng)).collect();
        let num = dist(&f.gradient(&u), &f.gradient(&v));
        let den = f.lipschitz() * dist(&u, &v);
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    worst
}
