//! Small dense linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Largest admissible 1-norm of `A s` before `mat_exp` refuses to evaluate.
pub const EXPONENT_LIMIT: f64 = 700.0;

/// Matrix exponential `e^{A s}`.
///
/// Backed by nalgebra's scaling-and-squaring Padé implementation.
pub fn mat_exp(a: &Matrix, s: f64) -> Result<Matrix> {
    if !s.is_finite() {
        return Err(Error::InvalidState(format!("non-finite time {s}")));
    }
    let scaled = a * s;
    let norm = one_norm(&scaled);
    if !norm.is_finite() || norm > EXPONENT_LIMIT {
        return Err(Error::ExponentTooLarge(norm));
    }
    Ok(scaled.exp())
}

pub fn one_norm(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Operator 2-norm (largest singular value).
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// `xᵀ M x`.
pub fn quad_form(m: &Matrix, x: &Vector) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[(i, j)] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}

/// Extreme eigenvalues of a symmetric matrix, `(lambda_min, lambda_max)`.
pub fn sym_eig_bounds(m: &Matrix) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn is_symmetric(m: &Matrix, rel_tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1e-300);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= rel_tol * scale))
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// `dst = m * x`, without allocating.
#[inline]
pub fn mat_vec_into(m: &Matrix, x: &Vector, dst: &mut Vector) {
    dst.gemv(1.0, m, x, 0.0);
}

pub fn row_major(rows: usize, cols: usize, data: &[f64]) -> Matrix {
    Matrix::from_row_slice(rows, cols, data)
}

pub fn to_row_major(m: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}
