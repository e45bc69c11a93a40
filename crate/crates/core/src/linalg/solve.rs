use num_complex::Complex64;

use super::{Matrix, ZERO};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl LuFactors {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.ensure_square()?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = a.norm_max();
        let tiny = (n.max(1) as f64) * f64::EPSILON * scale;

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= tiny || pmax == 0.0 {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: pmax,
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= l * u;
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn n(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A X = B` for a matrix right-hand side with any column count.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.n();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: b.rows(),
            });
        }
        let m = b.cols();
        let mut x = Matrix::from_fn(n, m, |i, j| b[(self.perm[i], j)]);
        // forward substitution with unit lower factor
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l == ZERO {
                    continue;
                }
                for j in 0..m {
                    let v = x[(k, j)];
                    x[(i, j)] -= l * v;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                if u == ZERO {
                    continue;
                }
                for j in 0..m {
                    let v = x[(k, j)];
                    x[(i, j)] -= u * v;
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..m {
                x[(i, j)] /= d;
            }
        }
        Ok(x)
    }

    pub fn det(&self) -> Complex64 {
        self.lu.diag().into_iter().fold(Complex64::new(self.sign, 0.0), |acc, d| acc * d)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.n()))
    }
}

/// Solves `a x = b` by pivoted elimination.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.ensure_square()?;
    if b.rows() != a.rows() {
        return Err(Error::DimensionMismatch {
            left: a.rows(),
            right: b.rows(),
        });
    }
    LuFactors::new(a)?.solve(b)
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    LuFactors::new(a)?.inverse()
}

/// Determinant via elimination; zero for matrices singular to working precision.
pub fn det(a: &Matrix) -> Result<Complex64> {
    a.ensure_square()?;
    match LuFactors::new(a) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::SingularMatrix { .. }) => Ok(ZERO),
        Err(e) => Err(e),
    }
}

/// `||A||_1 ||A^{-1}||_1`, infinite when `A` is singular.
pub fn condition_number(a: &Matrix) -> f64 {
    let norm1 = |m: &Matrix| {
        (0..m.cols())
            .map(|j| (0..m.rows()).map(|i| m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match inverse(a) {
        Ok(inv) => norm1(a) * norm1(&inv),
        Err(_) => f64::INFINITY,
    }
}
