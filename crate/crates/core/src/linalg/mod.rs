//! Dense complex matrices and the factorizations the rest of the crate builds on.
//!
//! [`Matrix`] is a plain row-major container. Most algebra works on square
//! matrices, but rectangular shapes are allowed so that range bases of
//! projections (`n x k`) can be represented with the same type.

mod schur;
mod solve;
mod svd;

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use schur::{eigenvalues, reorder_schur, schur, OrderingTag, SchurForm};
pub use solve::{condition_number, det, inverse, solve, LuFactors};
pub use svd::{hermitian_eigen, jacobi_svd, psd_gram_power, singular_values, Svd};
pub(crate) use schur::{hessenberg_form, reorder_by_keys, schur_unordered};
pub(crate) use svd::largest_singular_value;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn scalar(n: usize, c: Complex64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Square matrix from nested real rows. Panics on ragged input; meant for
    /// literals in tests and examples.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n, rows.first().map_or(0, |r| r.len()));
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), m.cols, "ragged matrix literal");
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = Complex64::new(x, 0.0);
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Dimension of a square matrix.
    #[inline]
    pub fn n(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `self - c I`.
    pub fn shift(&self, c: Complex64) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] -= c;
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        self.diag().into_iter().sum()
    }

    /// Normalized trace `tau = Tr / n`.
    pub fn tau(&self) -> Complex64 {
        self.trace() / self.rows as f64
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Operator 2-norm (largest singular value).
    pub fn norm2(&self) -> f64 {
        svd::largest_singular_value(self)
    }

    pub fn strict_lower_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..i.min(self.cols) {
                s += self[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Norm of the lower triangle including the diagonal.
    pub fn lower_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..=i.min(self.cols.saturating_sub(1)) {
                if j < self.cols {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn try_mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                left: self.cols,
                right: rhs.rows,
            });
        }
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn try_add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_same_shape(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a + b))
    }

    pub fn try_sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_same_shape(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a - b))
    }

    fn check_same_shape(&self, rhs: &Matrix) -> Result<()> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                left: self.rows,
                right: rhs.rows,
            });
        }
        if self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                left: self.cols,
                right: rhs.cols,
            });
        }
        Ok(())
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Non-negative integer power by repeated squaring.
    pub fn powi(&self, mut k: u32) -> Matrix {
        let mut base = self.clone();
        let mut acc = Matrix::identity(self.rows);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `A B - B A`.
    pub fn commutator(&self, rhs: &Matrix) -> Matrix {
        &(self * rhs) - &(rhs * self)
    }

    /// `||A* A - A A*||_F`.
    pub fn normality_defect(&self) -> f64 {
        let a = self.adjoint();
        (&(&a * self) - &(self * &a)).norm_fro()
    }

    /// Columns `range` of the matrix as a new `rows x len` matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Matrix {
        Matrix::from_fn(self.rows, range.len(), |i, j| self[(i, range.start + j)])
    }

    /// Conjugation `V* self V`.
    pub fn compress(&self, v: &Matrix) -> Matrix {
        &(&v.adjoint() * self) * v
    }

    /// Conjugation `V self V*`.
    pub fn expand(&self, v: &Matrix) -> Matrix {
        &(v * self) * &v.adjoint()
    }

    /// Relative distance `||self - other||_F / max(floor, ||other||_F)`.
    pub fn rel_dist(&self, other: &Matrix, floor: f64) -> f64 {
        (self - other).norm_fro() / other.norm_fro().max(floor)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

// The operator impls panic on shape mismatch; fallible callers use `try_*`.
impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl Neg for &Matrix {
    type Output = Matrix;

    fn neg(self) -> Matrix {
        self.scale_real(-1.0)
    }
}

/// Checked dense product.
pub fn multiply(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.ensure_square()?;
    b.ensure_square()?;
    a.try_mul(b)
}

/// Greedy nearest-neighbour matching of two multisets of complex numbers.
///
/// Each element of `a`, in order, is paired with the nearest unused element
/// of `b`; the result is the largest pair distance. This is not a metric for
/// adversarial clusters but is stable for the well-separated or tightly
/// clustered spectra seen in practice. Returns `f64::INFINITY` when the sizes
/// differ.
pub fn match_multisets(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &x in a {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (k, &y) in b.iter().enumerate() {
            if !used[k] {
                let d = (x - y).norm();
                if d < best_d {
                    best_d = d;
                    best = Some(k);
                }
            }
        }
        if let Some(k) = best {
            used[k] = true;
            worst = worst.max(best_d);
        }
    }
    worst
}
