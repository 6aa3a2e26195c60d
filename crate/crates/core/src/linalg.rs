//! Small dense complex-matrix helpers shared across modules.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::MatRef;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Entrywise max modulus; zero for an empty matrix.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_slice(v: &[C64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Builds a complex matrix from real and optional imaginary parts given row-major.
pub fn from_rows(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Option<CMat> {
    let rows = re.len();
    if rows == 0 {
        return None;
    }
    let cols = re[0].len();
    if cols == 0 || re.iter().any(|r| r.len() != cols) {
        return None;
    }
    if let Some(im) = im {
        if im.len() != rows || im.iter().any(|r| r.len() != cols) {
            return None;
        }
    }
    Some(CMat::from_fn(rows, cols, |r, col| {
        let imag = im.map(|m| m[r][col]).unwrap_or(0.0);
        C64::new(re[r][col], imag)
    }))
}

/// Partial-pivot LU of a square complex matrix, factored once and reused
/// for solves with the matrix and its transpose.
pub struct Lu {
    inner: PartialPivLu<C64>,
    dim: usize,
}

impl Lu {
    pub fn new(a: &CMat) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square matrix");
        let view = MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols());
        Self {
            inner: PartialPivLu::new(view),
            dim: a.nrows(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// log det; `None` when a pivot vanishes or is not finite.
    pub fn log_det(&self) -> Option<C64> {
        let u = self.inner.U();
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.dim {
            let d = u[(k, k)];
            if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
                return None;
            }
            acc += d.ln();
        }
        if odd_permutation(self.inner.P().arrays().0) {
            acc += C64::new(0.0, std::f64::consts::PI);
        }
        Some(acc)
    }

    /// `A x = b`.
    pub fn solve(&self, b: &CMat) -> CMat {
        from_faer(self.inner.solve(to_faer(b)).as_ref())
    }

    /// `A^T x = b`.
    pub fn solve_transpose(&self, b: &CMat) -> CMat {
        from_faer(self.inner.solve_transpose(to_faer(b)).as_ref())
    }
}

fn to_faer(m: &CMat) -> MatRef<'_, C64> {
    MatRef::from_column_major_slice(m.as_slice(), m.nrows(), m.ncols())
}

fn from_faer(m: MatRef<'_, C64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn odd_permutation(fwd: &[usize]) -> bool {
    let mut seen = vec![false; fwd.len()];
    let mut transpositions = 0;
    for start in 0..fwd.len() {
        let mut k = start;
        let mut len = 0_usize;
        while !seen[k] {
            seen[k] = true;
            k = fwd[k];
            len += 1;
        }
        transpositions += len.saturating_sub(1);
    }
    transpositions % 2 == 1
}

/// `a * b` through four real products, which go to the blocked real GEMM
/// instead of the generic complex loop.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}
