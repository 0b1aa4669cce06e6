//! Dense vector helpers, matrix-free linear operators, spectral-norm
//! estimation and conjugate gradients.
//!
//! Vectors are plain `[f64]` slices. Operators are anything implementing
//! [`LinearOperator`]; the dense matrix, identity, diagonal and 2-D
//! finite-difference (total variation) operators ship with the crate.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(s: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// `a * x + b * y`
pub fn lincomb(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// A linear map between real vector spaces together with its adjoint.
pub trait LinearOperator: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64>;

    /// Dense storage, when the operator has one.
    fn as_dense(&self) -> Option<&DenseMatrix> {
        None
    }

    fn is_identity(&self) -> bool {
        false
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        check_dim("matrix data length", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in d.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            check_dim("matrix row length", c, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self * other`
    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        check_dim("matmul inner dimension", self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if *a != 0.0 {
                    axpy(*a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ self`
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for (p, rp) in r.iter().enumerate() {
                if *rp == 0.0 {
                    continue;
                }
                axpy(*rp, r, &mut g.data[p * n..(p + 1) * n]);
            }
        }
        g
    }

    /// Parses the plain-text format: a `rows cols` header line followed by
    /// row-major whitespace-separated reals.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in reader.lines() {
            let line = line?;
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        let mut header = |name: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::Parse(format!("missing {name} in matrix header")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad {name}: {e}")))
        };
        let rows = header("rows")?;
        let cols = header("cols")?;
        let data = it
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad matrix entry {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite matrix entry".into()));
        }
        Self::new(rows, cols, data)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line = self
                .row(i)
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

impl LinearOperator for DenseMatrix {
    fn in_dim(&self) -> usize {
        self.cols
    }

    fn out_dim(&self) -> usize {
        self.rows
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "dense apply: input length");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "dense adjoint: input length");
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi != 0.0 {
                axpy(*yi, self.row(i), &mut out);
            }
        }
        out
    }

    fn as_dense(&self) -> Option<&DenseMatrix> {
        Some(self)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Identity {
    pub dim: usize,
}

impl Identity {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl LinearOperator for Identity {
    fn in_dim(&self) -> usize {
        self.dim
    }
    fn out_dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
    fn is_identity(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub struct Diagonal {
    pub diag: Vec<f64>,
}

impl Diagonal {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }
}

impl LinearOperator for Diagonal {
    fn in_dim(&self) -> usize {
        self.diag.len()
    }
    fn out_dim(&self) -> usize {
        self.diag.len()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.diag).map(|(a, d)| a * d).collect()
    }
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.apply(y)
    }
}

/// Forward-difference gradient of a `height x width` image stored row-major.
///
/// Output entry `2i` is the horizontal difference `u[r][c+1] - u[r][c]` and
/// entry `2i+1` the vertical difference `u[r+1][c] - u[r][c]` for pixel
/// `i = r * width + c`. Differences that would leave the image are zero.
#[derive(Clone, Copy, Debug)]
pub struct TvOperator {
    height: usize,
    width: usize,
}

pub fn tv_operator(height: usize, width: usize) -> Result<TvOperator> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument(format!(
            "TV operator needs positive image dimensions, got {height}x{width}"
        )));
    }
    Ok(TvOperator { height, width })
}

impl TvOperator {
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
}

impl LinearOperator for TvOperator {
    fn in_dim(&self) -> usize {
        self.height * self.width
    }

    fn out_dim(&self) -> usize {
        2 * self.height * self.width
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        assert_eq!(x.len(), h * w, "tv apply: input length");
        let mut out = vec![0.0; 2 * h * w];
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if c + 1 < w {
                    out[2 * i] = x[i + 1] - x[i];
                }
                if r + 1 < h {
                    out[2 * i + 1] = x[i + w] - x[i];
                }
            }
        }
        out
    }

    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        assert_eq!(y.len(), 2 * h * w, "tv adjoint: input length");
        let mut out = vec![0.0; h * w];
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if c + 1 < w {
                    let d = y[2 * i];
                    out[i + 1] += d;
                    out[i] -= d;
                }
                if r + 1 < h {
                    let d = y[2 * i + 1];
                    out[i + w] += d;
                    out[i] -= d;
                }
            }
        }
        out
    }
}

/// `weight * AᵀA + shift * I`, symmetric positive definite for `shift > 0`.
pub struct NormalOperator<'a> {
    pub op: &'a dyn LinearOperator,
    pub weight: f64,
    pub shift: f64,
}

impl LinearOperator for NormalOperator<'_> {
    fn in_dim(&self) -> usize {
        self.op.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.op.in_dim()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = if self.weight != 0.0 {
            scale(self.weight, &self.op.apply_adjoint(&self.op.apply(x)))
        } else {
            vec![0.0; x.len()]
        };
        axpy(self.shift, x, &mut out);
        out
    }
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.apply(y)
    }
}

/// Materializes an operator column by column.
pub fn to_dense(op: &dyn LinearOperator) -> DenseMatrix {
    if let Some(d) = op.as_dense() {
        return d.clone();
    }
    let (m, n) = (op.out_dim(), op.in_dim());
    let mut out = DenseMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = op.apply(&e);
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, *v);
        }
        e[j] = 0.0;
    }
    out
}

/// Estimates `λ_max(AᵀA) = ‖A‖²` by power iteration on `AᵀA`.
///
/// Stops once the relative change of the Rayleigh quotient drops below
/// `tol`. The start vector is Gaussian, drawn from `seed`.
pub fn power_iteration(
    op: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    let n = op.in_dim();
    if n == 0 {
        return Err(Error::InvalidArgument("operator has zero input dimension".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut estimate = 0.0;
    for it in 0..max_iter {
        let av = op.apply(&v);
        let lambda = norm_sq(&av);
        let w = op.apply_adjoint(&av);
        let nw = norm(&w);
        if nw == 0.0 {
            // v lies in the null space; for a random start this means A = 0.
            return Ok(0.0);
        }
        let converged = it > 0 && (lambda - estimate).abs() <= tol * lambda;
        estimate = lambda;
        if converged {
            return Ok(estimate);
        }
        v = w;
        v.iter_mut().for_each(|x| *x /= nw);
    }
    Err(Error::PowerIterationNotConverged {
        iterations: max_iter,
        estimate,
    })
}

/// Solves `op(x) = rhs` for symmetric positive definite `op`, starting at zero.
pub fn cg_solve(op: &dyn LinearOperator, rhs: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    cg_solve_warm(op, rhs, &vec![0.0; rhs.len()], tol, max_iter)
}

/// Conjugate gradients from the initial guess `x0`. Terminates when
/// `‖op(x) − rhs‖ ≤ tol · max(1, ‖rhs‖)`.
pub fn cg_solve_warm(
    op: &dyn LinearOperator,
    rhs: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    check_dim("cg rhs", op.out_dim(), rhs.len())?;
    check_dim("cg initial guess", op.in_dim(), x0.len())?;
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cg right-hand side"));
    }
    let target = tol * norm(rhs).max(1.0);
    let mut x = x0.to_vec();
    let mut r = sub(rhs, &op.apply(&x));
    let mut rr = norm_sq(&r);
    if rr.sqrt() <= target {
        return Ok(x);
    }
    let mut p = r.clone();
    for it in 0..max_iter {
        let ap = op.apply(&p);
        let curv = dot(&p, &ap);
        if !(curv > 0.0) {
            return Err(Error::CgFailed {
                iterations: it,
                residual: rr.sqrt(),
                reason: "non-positive curvature direction",
            });
        }
        let step = rr / curv;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        let rr_next = norm_sq(&r);
        if rr_next.sqrt() <= target {
            return Ok(x);
        }
        let beta = rr_next / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_next;
    }
    Err(Error::CgFailed {
        iterations: max_iter,
        residual: rr.sqrt(),
        reason: "iteration limit reached",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_identity_and_diagonal() {
        let id = Identity::new(3);
        let v = power_iteration(&id, 1e-12, 100, 0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let d = Diagonal::new(vec![1.0, 2.0, 3.0]);
        let v = power_iteration(&d, 1e-14, 10_000, 3).unwrap();
        assert!((v - 9.0).abs() < 1e-9 * 9.0, "got {v}");
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        let d = Diagonal::new(vec![1.0, 0.999_999, 0.5]);
        match power_iteration(&d, 1e-15, 3, 1) {
            Err(Error::PowerIterationNotConverged { iterations, estimate }) => {
                assert_eq!(iterations, 3);
                assert!(estimate > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn cg_small_systems() {
        let id = Identity::new(2);
        let x = cg_solve(&id, &[3.0, -1.0], 1e-12, 10).unwrap();
        assert!(dist(&x, &[3.0, -1.0]) < 1e-12);

        let d = Diagonal::new(vec![2.0, 4.0]);
        let x = cg_solve(&d, &[2.0, 8.0], 1e-12, 10).unwrap();
        assert!(dist(&x, &[1.0, 2.0]) < 1e-12);
    }

    #[test]
    fn cg_detects_indefinite_operator() {
        let d = Diagonal::new(vec![1.0, -1.0]);
        let err = cg_solve(&d, &[1.0, 1.0], 1e-12, 10).unwrap_err();
        assert!(matches!(err, Error::CgFailed { .. }));
    }

    #[test]
    fn tv_constant_image_is_flat() {
        let tv = tv_operator(3, 4).unwrap();
        assert!(tv.apply(&[5.0; 12]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tv_two_by_two_layout() {
        // [[0, 1], [0, 1]] row-major
        let tv = tv_operator(2, 2).unwrap();
        let out = tv.apply(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(out, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn tv_rejects_empty_image() {
        assert!(tv_operator(0, 3).is_err());
        assert!(tv_operator(3, 0).is_err());
    }

    #[test]
    fn dense_text_roundtrip() {
        let m = DenseMatrix::from_rows(&[vec![1.0, -2.5, 1e-300], vec![0.1, 3.0, -7.0]]).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("2 3\n"));
        let back = DenseMatrix::read_text(&buf[..]).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn dense_text_rejects_short_data() {
        assert!(DenseMatrix::read_text("2 2\n1 2 3".as_bytes()).is_err());
        assert!(DenseMatrix::read_text("2".as_bytes()).is_err());
    }

    #[test]
    fn gram_matches_matmul() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let g = m.gram();
        let g2 = m.transpose().matmul(&m).unwrap();
        assert_eq!(g, g2);
    }
}
