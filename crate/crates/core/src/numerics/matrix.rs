//! Small dense complex matrices.
//!
//! Everything here targets M ≤ 16 antennas (augmented covariances up to
//! 32×32), so the algorithms are the plain textbook ones.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use super::NumericsError;

/// Dense row-major complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = Complex64::new(1.0, 0.0);
        }
        out
    }

    /// Builds a matrix from row-major entries, rejecting shape mismatches and
    /// non-finite values.
    pub fn from_row_major(
        rows: usize,
        cols: usize,
        data: Vec<Complex64>,
    ) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::Shape {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut out = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            out[(i, i)] = *d;
        }
        out
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, NumericsError> {
        if self.cols != rhs.rows {
            return Err(NumericsError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, NumericsError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(NumericsError::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, NumericsError> {
        self.add(&rhs.scale(-1.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    /// Block matrix `[[a, b], [c, d]]`.
    pub fn block2x2(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, NumericsError> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(NumericsError::Dimension("inconsistent block shapes".into()));
        }
        let rows = a.rows + c.rows;
        let cols = a.cols + b.cols;
        let mut out = Self::zeros(rows, cols);
        for r in 0..rows {
            for col in 0..cols {
                out[(r, col)] = match (r < a.rows, col < a.cols) {
                    (true, true) => a[(r, col)],
                    (true, false) => b[(r, col - a.cols)],
                    (false, true) => c[(r - a.rows, col)],
                    (false, false) => d[(r - a.rows, col - a.cols)],
                };
            }
        }
        Ok(out)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// True iff `max |A[m,n] - conj(A[n,m])| <= tol`.
pub fn hermitian_check(a: &ComplexMatrix, tol: f64) -> Result<bool, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::Dimension(format!(
            "hermitian check needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut worst = 0.0_f64;
    for m in 0..n {
        for k in m..n {
            worst = worst.max((a[(m, k)] - a[(k, m)].conj()).norm());
        }
    }
    Ok(worst <= tol)
}

/// True iff `max |A[m,n] - A[n,m]| <= tol` (complex symmetry, no conjugate).
pub fn symmetric_check(a: &ComplexMatrix, tol: f64) -> Result<bool, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::Dimension(format!(
            "symmetry check needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut worst = 0.0_f64;
    for m in 0..n {
        for k in (m + 1)..n {
            worst = worst.max((a[(m, k)] - a[(k, m)]).norm());
        }
    }
    Ok(worst <= tol)
}

/// In-place LU factorisation with partial pivoting. Returns the pivot sign
/// and the upper-triangular diagonal, or `None` when a zero pivot shows up.
fn lu_diagonal(a: &ComplexMatrix) -> Option<(f64, Vec<Complex64>)> {
    let n = a.rows;
    let mut lu = a.data.clone();
    let mut sign = 1.0;
    for col in 0..n {
        let (pivot, best) = (col..n)
            .map(|r| (r, lu[r * n + col].norm()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == 0.0 {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                lu.swap(col * n + c, pivot * n + c);
            }
            sign = -sign;
        }
        let p = lu[col * n + col];
        for r in (col + 1)..n {
            let factor = lu[r * n + col] / p;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            lu[r * n + col] = factor;
            for c in (col + 1)..n {
                let u = lu[col * n + c];
                lu[r * n + c] -= factor * u;
            }
        }
    }
    Some((sign, (0..n).map(|i| lu[i * n + i]).collect()))
}

/// Determinant via partial-pivot LU. Singular matrices give exactly zero.
///
/// Panics if `a` is not square.
pub fn determinant(a: &ComplexMatrix) -> Complex64 {
    assert!(a.is_square(), "determinant of non-square matrix");
    if a.rows == 0 {
        return Complex64::new(1.0, 0.0);
    }
    match lu_diagonal(a) {
        None => Complex64::new(0.0, 0.0),
        Some((sign, diag)) => diag.into_iter().fold(Complex64::new(sign, 0.0), |acc, d| acc * d),
    }
}

/// `(ln|det A|, phase of det A)`, computed without forming the product so
/// that large or tiny determinants do not under/overflow. Singular input
/// yields `-inf` for the log-magnitude.
pub fn log_determinant(a: &ComplexMatrix) -> (f64, Complex64) {
    assert!(a.is_square(), "determinant of non-square matrix");
    match lu_diagonal(a) {
        None => (f64::NEG_INFINITY, Complex64::new(0.0, 0.0)),
        Some((sign, diag)) => {
            let mut log_abs = 0.0;
            let mut phase = Complex64::new(sign, 0.0);
            for d in diag {
                let r = d.norm();
                log_abs += r.ln();
                phase *= d / r;
            }
            (log_abs, phase)
        }
    }
}
