//! One-sided Jacobi SVD and cyclic Jacobi for Hermitian matrices.
//!
//! Both routines act on exact zero columns / entries without touching them,
//! which keeps structural zeros (for example in powers of strictly upper
//! triangular matrices) exact.

use num_complex::Complex64;

use super::{Matrix, ZERO};
use crate::error::Result;

const MAX_SWEEPS: usize = 80;

/// Singular values (descending) and right singular vectors of a matrix.
#[derive(Debug, Clone)]
pub struct Svd {
    pub sigma: Vec<f64>,
    /// Columns are right singular vectors, in the order of `sigma`.
    pub v: Matrix,
}

/// One-sided (Hestenes) Jacobi SVD of an `m x n` matrix.
pub fn jacobi_svd(a: &Matrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    // work on columns: store transposed so columns are contiguous
    let mut w: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { Complex64::new(1.0, 0.0) } else { ZERO }).collect())
        .collect();
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = w[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = w[i].iter().zip(&w[j]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols in [&mut w, &mut v] {
                    let (left, right) = cols.split_at_mut(j);
                    let (ci, cj) = (&mut left[i], &mut right[0]);
                    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
                        let yt = *y * phase.conj();
                        let xi = *x;
                        *x = xi * c - yt * s;
                        *y = xi * s + yt * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let _ = m;
    let mut order: Vec<(f64, usize)> = w
        .iter()
        .enumerate()
        .map(|(j, col)| (col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let sigma = order.iter().map(|&(s, _)| s).collect();
    let vm = Matrix::from_fn(n, n, |i, k| v[order[k].1][i]);
    Svd { sigma, v: vm }
}

pub(crate) fn largest_singular_value(a: &Matrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    jacobi_svd(a).sigma[0]
}

/// Singular values of a square matrix, descending and non-negative.
pub fn singular_values(t: &Matrix) -> Result<Vec<f64>> {
    t.ensure_square()?;
    Ok(jacobi_svd(t).sigma.into_iter().map(|s| s.max(0.0)).collect())
}

/// `(B* B)^p` for a real exponent `p > 0`, computed from the SVD of `B` so
/// that tiny singular values are not squared before the power is taken.
pub fn psd_gram_power(b: &Matrix, p: f64) -> Matrix {
    let svd = jacobi_svd(b);
    let n = b.cols();
    let weights: Vec<f64> = svd
        .sigma
        .iter()
        .map(|&s| if s > 0.0 { s.powf(2.0 * p) } else { 0.0 })
        .collect();
    Matrix::from_fn(n, n, |i, j| {
        let mut acc = ZERO;
        for (k, &wk) in weights.iter().enumerate() {
            if wk != 0.0 {
                acc += svd.v[(i, k)] * svd.v[(j, k)].conj() * wk;
            }
        }
        acc
    })
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary matrix whose columns are the matching eigenvectors.
///
/// Only the Hermitian part `(H + H*) / 2` is used.
pub fn hermitian_eigen(h: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = h.ensure_square()?;
    let mut a = Matrix::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let mut v = Matrix::identity(n);
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        let diag: f64 = (0..n).map(|i| a[(i, i)].norm_sqr()).sum();
        if off == 0.0 || off.sqrt() <= eps * eps * diag.sqrt() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = a[(p, q)];
                let bn = b.norm();
                if bn == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if bn <= eps * 1e-3 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                let e = b / bn;
                let tau = (aqq - app) / (2.0 * bn);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // columns: A <- A J, V <- V J
                for m in [&mut a, &mut v] {
                    for i in 0..n {
                        let hp = m[(i, p)];
                        let hq = m[(i, q)];
                        m[(i, p)] = hp * c - hq * e.conj() * s;
                        m[(i, q)] = hp * e * s + hq * c;
                    }
                }
                // rows: A <- J* A
                for j in 0..n {
                    let rp = a[(p, j)];
                    let rq = a[(q, j)];
                    a[(p, j)] = rp * c - rq * e * s;
                    a[(q, j)] = rp * e.conj() * s + rq * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(app - t * bn, 0.0);
                a[(q, q)] = Complex64::new(aqq + t * bn, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vecs = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok((values, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn diagonal_singular_values() {
        let s = singular_values(&Matrix::from_real_diag(&[-2.0, 1.0])).unwrap();
        assert!(close(&s, &[2.0, 1.0], 1e-15));
    }

    #[test]
    fn nilpotent_singular_values() {
        let s = singular_values(&Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(s, vec![1.0, 0.0]);
    }

    #[test]
    fn triangular_singular_values_match_quadratic_formula() {
        // T*T = [[1,1],[1,5]]: eigenvalues 3 +- sqrt(5)
        let s = singular_values(&Matrix::from_real(&[&[1.0, 1.0], &[0.0, 2.0]])).unwrap();
        let want = [(3.0 + 5f64.sqrt()).sqrt(), (3.0 - 5f64.sqrt()).sqrt()];
        assert!(close(&s, &want, 1e-14));
        assert!((s[0] * s[1] - 2.0).abs() < 1e-14);
        assert!((s[0] - 2.288).abs() < 1e-3 && (s[1] - 0.874).abs() < 1e-3);
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let h = Matrix::from_fn(4, 4, |i, j| {
            let z = Complex64::new((i + 2 * j) as f64 * 0.3, (i as f64 - j as f64) * 0.7);
            if i == j {
                Complex64::new(i as f64, 0.0)
            } else if i < j {
                z
            } else {
                Complex64::new((j + 2 * i) as f64 * 0.3, (j as f64 - i as f64) * 0.7).conj()
            }
        });
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        let rec = Matrix::from_diag(
            &vals.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>(),
        )
        .expand(&vecs);
        assert!((&rec - &h).norm_fro() < 1e-13 * h.norm_fro());
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn gram_power_half_is_abs() {
        // (B*B)^(1/2) for B = diag(-3, 2)
        let b = Matrix::from_real_diag(&[-3.0, 2.0]);
        let p = psd_gram_power(&b, 0.5);
        assert!(p.rel_dist(&Matrix::from_real_diag(&[3.0, 2.0]), 1.0) < 1e-15);
    }

    #[test]
    fn zero_columns_stay_exact() {
        let q = Matrix::from_real(&[&[0.0, 1.0, 2.0], &[0.0, 0.0, 3.0], &[0.0, 0.0, 0.0]]);
        let svd = jacobi_svd(&q.powi(2));
        assert_eq!(svd.sigma[1], 0.0);
        assert_eq!(svd.sigma[2], 0.0);
        assert!((svd.sigma[0] - 3.0).abs() < 1e-15);
    }
}
