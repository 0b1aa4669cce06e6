use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use super::{std_normal, CompositeProblem, LeastSquares, LinConstrainedProblem, Logistic, Quadratic, TwoBlockProblem};
use crate::error::{Error, Result};
use crate::linalg::{tv_operator, DenseMatrix, Identity, LinearOperator};
use crate::prox::{GroupL21, L1Norm, LowerBound};

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| std * std_normal(rng))
        .collect();
    DenseMatrix::new(rows, cols, data).expect("positive dimensions")
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| std_normal(rng)).collect()
}

pub struct LogisticInstance {
    pub problem: CompositeProblem,
    pub loss: Arc<Logistic>,
    pub lambda: f64,
    /// Ground truth `(x̃, x₀)`.
    pub x_true: Vec<f64>,
    pub support: Vec<usize>,
}

/// Sparse logistic regression with `m` samples and `n` features.
///
/// A non-positive `lambda` selects `0.1 λ_max`, where `λ_max` is the smallest
/// weight for which the intercept-only model is optimal.
pub fn gen_logistic(m: usize, n: usize, s: usize, lambda: f64, seed: u64) -> Result<LogisticInstance> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("logistic instance needs m, n >= 1".into()));
    }
    if s > n {
        return Err(Error::InvalidArgument(format!("sparsity s = {s} exceeds n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = gaussian_matrix(&mut rng, m, n, 1.0);
    let mut x_true = vec![0.0; n + 1];
    let mut support: Vec<usize> = sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    for &j in &support {
        x_true[j] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    x_true[n] = std_normal(&mut rng);

    let scores = features.apply(&x_true[..n]);
    let labels: Vec<f64> = scores
        .iter()
        .map(|v| if v + x_true[n] >= 0.0 { 1.0 } else { -1.0 })
        .collect();

    let lambda = if lambda > 0.0 {
        lambda
    } else {
        0.1 * logistic_lambda_max(&features, &labels)?
    };
    let loss = Arc::new(Logistic::new(features, labels)?);
    let g = Arc::new(L1Norm::new(lambda)?.with_free_tail(1));
    Ok(LogisticInstance {
        problem: CompositeProblem::new(loss.clone(), g),
        loss,
        lambda,
        x_true,
        support,
    })
}

/// `‖Ãᵀ∇ℓ‖_∞` at the intercept-only optimum `x̃ = 0`, `x₀ = log(p/(1−p))`.
pub fn logistic_lambda_max(features: &DenseMatrix, labels: &[f64]) -> Result<f64> {
    let m = labels.len() as f64;
    let p = labels.iter().filter(|b| **b > 0.0).count() as f64 / m;
    if p == 0.0 || p == 1.0 {
        return Err(Error::InvalidArgument(
            "all labels share one sign; the intercept-only model has no finite optimum".into(),
        ));
    }
    // at the optimum σ(−bᵢx₀) is 1−p for positive labels and p for negative ones
    let w: Vec<f64> = labels
        .iter()
        .map(|b| if *b > 0.0 { -(1.0 - p) } else { p })
        .collect();
    let grad = features.apply_adjoint(&w);
    Ok(grad.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

pub struct QpInstance {
    pub problem: LinConstrainedProblem,
    pub quadratic: Arc<Quadratic>,
    pub a: Arc<DenseMatrix>,
    /// Feasible point used to build `b = A x₀`.
    pub x0: Vec<f64>,
}

/// Nonnegative equality-constrained QP with `Q = MᵀM/n`.
pub fn gen_qp(m: usize, n: usize, seed: u64) -> Result<QpInstance> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!("QP needs 0 < m < n, got m = {m}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mm = gaussian_matrix(&mut rng, n, n, 1.0);
    let mut q = mm.gram();
    for v in q.data_mut() {
        *v /= n as f64;
    }
    let a = gaussian_matrix(&mut rng, m, n, 1.0);
    let c = gaussian_vec(&mut rng, n);
    let x0: Vec<f64> = gaussian_vec(&mut rng, n).iter().map(|v| v.abs()).collect();
    let b = a.apply(&x0);

    let quadratic = Arc::new(Quadratic::new(q, c)?);
    let a = Arc::new(a);
    let problem = LinConstrainedProblem::new(
        quadratic.clone(),
        Arc::new(LowerBound::nonneg()),
        a.clone(),
        b,
    )?;
    Ok(QpInstance {
        problem,
        quadratic,
        a,
        x0,
    })
}

/// (intensity, semi-axis a, semi-axis b, center x, center y, angle in degrees)
const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Modified (high-contrast) Shepp-Logan phantom, row-major, top row first,
/// clipped to `[0, 1]`.
pub fn shepp_logan(size: usize) -> Result<Vec<f64>> {
    if size < 8 {
        return Err(Error::InvalidArgument(format!("phantom size must be at least 8, got {size}")));
    }
    let nf = size as f64;
    let mut img = vec![0.0; size * size];
    for r in 0..size {
        let y = (nf - 1.0 - 2.0 * r as f64) / nf;
        for c in 0..size {
            let x = (2.0 * c as f64 + 1.0 - nf) / nf;
            let mut v = 0.0;
            for [intensity, a, b, x0, y0, deg] in SHEPP_LOGAN {
                let (s, co) = deg.to_radians().sin_cos();
                let xr = (x - x0) * co + (y - y0) * s;
                let yr = -(x - x0) * s + (y - y0) * co;
                if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                    v += intensity;
                }
            }
            img[r * size + c] = v.clamp(0.0, 1.0);
        }
    }
    Ok(img)
}

pub struct CsInstance {
    pub problem: TwoBlockProblem,
    pub loss: Arc<LeastSquares>,
    pub size: usize,
    pub measurements: usize,
    pub lambda: f64,
    pub x_true: Vec<f64>,
}

/// TV-regularized compressive sensing in split form
/// `min ½‖Dx − b‖² + λ‖y‖₂,₁  s.t.  y − ∇x = 0`.
pub fn gen_cs_tv(size: usize, ratio: f64, sigma2: f64, lambda: f64, seed: u64) -> Result<CsInstance> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio must lie in (0, 1), got {ratio}")));
    }
    if !(sigma2 >= 0.0) || !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need σ² >= 0 and λ > 0, got σ² = {sigma2}, λ = {lambda}"
        )));
    }
    let n = size * size;
    let m = (ratio * n as f64).round() as usize;
    if m == 0 {
        return Err(Error::InvalidArgument("zero measurements".into()));
    }
    let x_true = shepp_logan(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = gaussian_matrix(&mut rng, m, n, 1.0 / (m as f64).sqrt());
    let noise_std = sigma2.sqrt();
    let mut b = d.apply(&x_true);
    for v in &mut b {
        *v += noise_std * std_normal(&mut rng);
    }
    let loss = Arc::new(LeastSquares::new(d, b)?);
    let tv = Arc::new(tv_operator(size, size)?);
    let rows = tv.out_dim();
    let problem = TwoBlockProblem::new(
        loss.clone(),
        Arc::new(GroupL21::new(lambda, 2)?),
        tv,
        Arc::new(Identity::new(rows)),
        vec![0.0; rows],
    )?;
    Ok(CsInstance {
        problem,
        loss,
        size,
        measurements: m,
        lambda,
        x_true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_sq;
    use crate::problems::SmoothOracle;

    #[test]
    fn logistic_rejects_dense_truth_beyond_n() {
        assert!(gen_logistic(5, 3, 4, 0.1, 0).is_err());
    }

    #[test]
    fn logistic_shapes() {
        let inst = gen_logistic(20, 30, 4, 0.0, 1).unwrap();
        assert_eq!(inst.problem.dim(), 31);
        assert_eq!(inst.support.len(), 4);
        assert!(inst.lambda > 0.0);
    }

    #[test]
    fn qp_feasible_by_construction() {
        let inst = gen_qp(5, 12, 3).unwrap();
        assert_eq!(inst.problem.feasibility(&inst.x0), 0.0);
        assert!(inst.x0.iter().all(|v| *v >= 0.0));
        assert!(gen_qp(12, 12, 3).is_err());
    }

    #[test]
    fn phantom_range_and_geometry() {
        let img = shepp_logan(64).unwrap();
        assert_eq!(img.len(), 4096);
        assert!(img.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(img[32 * 64 + 32] > 0.0);
        assert_eq!(img[0], 0.0);
        assert_eq!(img[4095], 0.0);
        assert!(shepp_logan(7).is_err());
    }

    #[test]
    fn cs_shapes() {
        let inst = gen_cs_tv(16, 0.3, 0.0, 1e-3, 0).unwrap();
        assert_eq!((inst.measurements, inst.problem.x_dim()), (77, 256));
        assert_eq!(inst.problem.y_dim(), 512);
        let g = inst.loss.gradient(&inst.x_true);
        assert!(norm_sq(&g) < 1e-24);
    }
}
