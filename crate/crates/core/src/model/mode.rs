use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{Matrix, Vector};

/// Zero-based mode index. Displayed (and written to files) one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode(pub usize);

impl Mode {
    pub fn from_number(number: usize) -> Self {
        assert!(number >= 1, "mode numbers start at 1");
        Mode(number - 1)
    }

    pub fn number(self) -> usize {
        self.0 + 1
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Matrices of one mode: `dX/dt = A X + B u`, nominal gain `u = K X`,
/// Lyapunov weight `P` and decay weight `Q`.
///
/// Construction never fails; shape and definiteness problems are reported by
/// [`validate_system`](super::validate_system).
#[derive(Debug, Clone)]
pub struct ModeDynamics {
    a: Matrix,
    b: Matrix,
    k: Matrix,
    p: Matrix,
    q: Matrix,
    h: Matrix,
    b_col: Vector,
    k_row: Vector,
}

impl ModeDynamics {
    /// `b` is `n x 1`, `k` is `1 x n`.
    pub fn new(a: Matrix, b: Matrix, k: Matrix, p: Matrix, q: Matrix) -> Self {
        let shapes_ok = a.is_square()
            && b.nrows() == a.nrows()
            && k.ncols() == a.ncols()
            && b.ncols() == k.nrows();
        let h = if shapes_ok { &a + &b * &k } else { Matrix::zeros(0, 0) };
        let b_col = if b.ncols() >= 1 { b.column(0).into_owned() } else { Vector::zeros(0) };
        let k_row = if k.nrows() >= 1 { k.row(0).transpose() } else { Vector::zeros(0) };
        ModeDynamics { a, b, k, p, q, h, b_col, k_row }
    }

    /// Convenience constructor from an input column and gain row.
    pub fn from_vectors(a: Matrix, b: Vector, k: Vector, p: Matrix, q: Matrix) -> Self {
        let n = b.len();
        let bm = Matrix::from_column_slice(n, 1, b.as_slice());
        let km = Matrix::from_row_slice(1, k.len(), k.as_slice());
        Self::new(a, bm, km, p, q)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    /// Closed-loop matrix `A + B K`, computed once at construction.
    pub fn h(&self) -> &Matrix {
        &self.h
    }

    /// Input map as a vector.
    pub fn b_col(&self) -> &Vector {
        &self.b_col
    }

    /// Gain as a vector (so `u = k_row . x`).
    pub fn k_row(&self) -> &Vector {
        &self.k_row
    }

    pub fn gain(&self, x: &Vector) -> f64 {
        self.k_row.dot(x)
    }

    pub fn with_q(mut self, q: Matrix) -> Self {
        self.q = q;
        self
    }

    pub fn with_k(self, k: Vector) -> Self {
        let (a, b, p, q) = (self.a, self.b_col, self.p, self.q);
        Self::from_vectors(a, b, k, p, q)
    }
}
