//! Dense complex linear algebra for the precoder solvers.
//!
//! Everything here is sized for the regime the solvers live in (a few hundred
//! rows at most), so the routines favour simplicity and cache-friendly
//! column-major loops over blocking. The positive-definite systems are solved
//! through a Cholesky factorization that is computed once and reused across
//! all right-hand sides; no routine ever forms an explicit inverse.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    /// Builds a matrix from column slices. All columns must share a length.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for col in columns {
            assert_eq!(col.len(), rows, "ragged columns");
            data.extend_from_slice(col);
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[col * self.rows + row] = value;
    }

    #[inline]
    pub fn col(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, col: usize) -> &mut [Complex64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// Scales column `col` by a real factor.
    pub fn scale_col(&mut self, col: usize, factor: f64) {
        for v in self.col_mut(col) {
            *v *= factor;
        }
    }

    /// Squared Frobenius norm, i.e. the total transmit power of a precoder.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise magnitude of the difference with `other`.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Plain matrix product `A B`.
pub fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.cols(), b.rows(), "inner dimensions must agree");
    let mut c = CMat::zeros(a.rows(), b.cols());
    for j in 0..b.cols() {
        let bj = b.col(j);
        let cj = c.col_mut(j);
        for (k, &bkj) in bj.iter().enumerate() {
            if bkj == Complex64::ZERO {
                continue;
            }
            let ak = a.col(k);
            for (crow, &arow) in cj.iter_mut().zip(ak) {
                *crow += arow * bkj;
            }
        }
    }
    c
}

/// Hermitian inner product `x^H y`.
#[inline]
pub fn herm_dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Squared Euclidean norm of a complex vector.
#[inline]
pub fn norm_sq(x: &[Complex64]) -> f64 {
    x.iter().map(Complex64::norm_sqr).sum()
}

/// Builds the regularized Gram matrix `sum_i weights[i] * h_i h_i^H + shift * I`
/// from the columns of `h`. Only the lower triangle is filled; the factorization
/// below reads nothing else.
pub fn weighted_gram(h: &CMat, weights: &[f64], shift: f64) -> CMat {
    let n = h.rows();
    assert_eq!(weights.len(), h.cols());
    let mut m = CMat::zeros(n, n);
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let hi = h.col(i);
        for c in 0..n {
            let scaled = w * hi[c].conj();
            let col = m.col_mut(c);
            for r in c..n {
                col[r] += hi[r] * scaled;
            }
        }
    }
    for d in 0..n {
        let v = m.get(d, d) + shift;
        m.set(d, d, v);
    }
    m
}

/// Lower-triangular Cholesky factor `L` of a Hermitian positive-definite
/// matrix, `A = L L^H`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<Complex64>, // column-major; upper triangle is garbage
}

impl Cholesky {
    /// Factors a Hermitian positive-definite matrix. Only the lower triangle
    /// of `a` is read. Fails with [`Error::NotPositiveDefinite`] when a pivot
    /// is non-positive or not finite.
    pub fn factor(a: &CMat) -> Result<Self> {
        let n = a.rows();
        assert_eq!(a.cols(), n, "matrix must be square");
        let mut l = a.data.clone();

        for j in 0..n {
            let d = l[j * n + j].re;
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[j * n + j] = Complex64::new(ljj, 0.0);
            for i in j + 1..n {
                l[j * n + i] /= ljj;
            }
            // Rank-1 update of the trailing lower triangle.
            for k in j + 1..n {
                let f = l[j * n + k].conj();
                if f == Complex64::ZERO {
                    continue;
                }
                for i in k..n {
                    let lij = l[j * n + i];
                    l[k * n + i] -= lij * f;
                }
            }
        }
        Ok(Self { n, l })
    }

    /// Solves `A x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// Solves `A X = B` column by column, reusing the factorization.
    pub fn solve_mat(&self, b: &CMat) -> CMat {
        assert_eq!(b.rows(), self.n);
        let mut x = b.clone();
        for j in 0..x.cols() {
            let col = x.col_mut(j);
            self.forward(col);
            self.backward(col);
        }
        x
    }

    /// Quadratic form `b^H A^{-1} b`, computed as `||L^{-1} b||^2` with a
    /// single forward substitution.
    pub fn quadratic_form(&self, b: &[Complex64]) -> f64 {
        assert_eq!(b.len(), self.n);
        let mut y = b.to_vec();
        self.forward(&mut y);
        norm_sq(&y)
    }

    /// In-place forward substitution `L y = b`.
    fn forward(&self, b: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            let yj = b[j] / self.l[j * n + j].re;
            b[j] = yj;
            for i in j + 1..n {
                b[i] -= self.l[j * n + i] * yj;
            }
        }
    }

    /// In-place backward substitution `L^H x = y`.
    fn backward(&self, y: &mut [Complex64]) {
        let n = self.n;
        for j in (0..n).rev() {
            let mut s = y[j];
            for k in j + 1..n {
                s -= self.l[j * n + k].conj() * y[k];
            }
            y[j] = s / self.l[j * n + j].re;
        }
    }
}

/// Marker for a numerically singular system.
#[derive(Debug, Clone, Copy)]
pub struct Singular;

/// Solves the real square system `A x = b` in place by LU with partial
/// pivoting. `a` is column-major and is destroyed; the solution replaces `b`.
pub fn lu_solve_in_place(
    a: &mut [f64],
    n: usize,
    b: &mut [f64],
) -> std::result::Result<(), Singular> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Singular);
    }
    let tiny = scale * 1e-300_f64.max(f64::EPSILON * n as f64);

    for col in 0..n {
        // Pivot search in the current column.
        let mut p = col;
        let mut pmax = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[col * n + r].abs();
            if v > pmax {
                pmax = v;
                p = r;
            }
        }
        if !(pmax > tiny) || !pmax.is_finite() {
            return Err(Singular);
        }
        if p != col {
            for c in 0..n {
                a.swap(c * n + col, c * n + p);
            }
            b.swap(col, p);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let f = a[col * n + r] / pivot;
            a[col * n + r] = f;
            if f != 0.0 {
                for c in col + 1..n {
                    let u = a[c * n + col];
                    a[c * n + r] -= f * u;
                }
                b[r] -= f * b[col];
            }
        }
    }
    // Back substitution.
    for col in (0..n).rev() {
        let x = b[col] / a[col * n + col];
        b[col] = x;
        for r in 0..col {
            b[r] -= a[col * n + r] * x;
        }
    }
    Ok(())
}
