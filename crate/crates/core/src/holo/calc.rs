//! Three independent routes to `h(T)`: Cauchy quadrature, the block
//! Schur-Parlett recurrence, and pointwise evaluation for normal matrices.

use num_complex::Complex64;
use rayon::prelude::*;

use super::contour::Contour;
use super::function::HoloFunction;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, hessenberg_form, reorder_by_keys, schur_unordered, Matrix, ONE, ZERO};

/// LU factors of an upper Hessenberg matrix with adjacent-row pivoting.
struct HessenbergLu {
    lu: Matrix,
    swapped: Vec<bool>,
    multipliers: Vec<Complex64>,
}

impl HessenbergLu {
    fn factor(mut a: Matrix, node: Complex64) -> Result<Self> {
        let n = a.rows();
        let scale = a.norm_max().max(f64::MIN_POSITIVE);
        let mut swapped = vec![false; n.saturating_sub(1)];
        let mut multipliers = vec![ZERO; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            if a[(k + 1, k)].norm() > a[(k, k)].norm() {
                for j in k..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(k + 1, j)];
                    a[(k + 1, j)] = tmp;
                }
                swapped[k] = true;
            }
            let pivot = a[(k, k)];
            if pivot.norm() <= n as f64 * f64::EPSILON * scale {
                return Err(Error::SingularResolvent { node });
            }
            let l = a[(k + 1, k)] / pivot;
            multipliers[k] = l;
            a[(k + 1, k)] = ZERO;
            if l != ZERO {
                for j in k + 1..n {
                    let d = l * a[(k, j)];
                    a[(k + 1, j)] -= d;
                }
            }
        }
        if n > 0 && a[(n - 1, n - 1)].norm() <= n as f64 * f64::EPSILON * scale {
            return Err(Error::SingularResolvent { node });
        }
        Ok(Self {
            lu: a,
            swapped,
            multipliers,
        })
    }

    fn inverse(&self) -> Matrix {
        let n = self.lu.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut x = vec![ZERO; n];
        for col in 0..n {
            x.iter_mut().for_each(|v| *v = ZERO);
            x[col] = ONE;
            // the forward sweep touches only entries at or after the first nonzero
            let start = col.saturating_sub(1);
            for k in start..n.saturating_sub(1) {
                if self.swapped[k] {
                    x.swap(k, k + 1);
                }
                let d = self.multipliers[k] * x[k];
                x[k + 1] -= d;
            }
            for i in (0..n).rev() {
                let mut acc = x[i];
                for j in i + 1..n {
                    acc -= self.lu[(i, j)] * x[j];
                }
                x[i] = acc / self.lu[(i, i)];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        inv
    }
}

fn check_nodes(contour: &Contour, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut nodes = Vec::new();
    for circle in &contour.circles {
        for node in circle.points() {
            if spectrum.iter().any(|e| (node - e).norm() < 1e-6 * circle.radius) {
                return Err(Error::SingularResolvent { node });
            }
            nodes.push(node);
        }
    }
    Ok(nodes)
}

/// Applies the trapezoid rule for several functions at once, sharing one
/// resolvent per node.
///
/// The per-node work runs on the rayon pool; the weighted sum is accumulated
/// in node order so the result does not depend on the number of workers.
pub fn calc_contour_many(t: &Matrix, hs: &[&HoloFunction], contour: &Contour) -> Result<Vec<Matrix>> {
    let n = t.ensure_square()?;
    let spectrum = eigenvalues(t)?;
    for h in hs {
        contour.validate(&spectrum, h)?;
    }
    let nodes = check_nodes(contour, &spectrum)?;
    let mut weights = Vec::with_capacity(nodes.len());
    for circle in &contour.circles {
        let m = circle.nodes as f64;
        for node in circle.points() {
            let mut w = Vec::with_capacity(hs.len());
            for h in hs {
                w.push(h.eval(node)? * (node - circle.center) / m);
            }
            weights.push(w);
        }
    }

    let (v, hess) = hessenberg_form(t);
    let resolvents: Vec<Result<Matrix>> = nodes
        .par_iter()
        .map(|&node| {
            let shifted = hess.scale_real(-1.0).shift(-node);
            Ok(HessenbergLu::factor(shifted, node)?.inverse())
        })
        .collect();

    let mut sums = vec![Matrix::zeros(n, n); hs.len()];
    for (res, w) in resolvents.into_iter().zip(&weights) {
        let res = res?;
        for (sum, &wk) in sums.iter_mut().zip(w) {
            for (s, r) in sum.as_mut_slice().iter_mut().zip(res.as_slice()) {
                *s += wk * r;
            }
        }
    }
    Ok(sums.into_iter().map(|s| s.expand(&v)).collect())
}

/// Trapezoid rule for matrix-valued integrands: for each output `j`,
/// `sum_circles (1/M) sum_k (l_k - c) F_j(l_k)`.
///
/// The integrand may return several matrices per node; each is accumulated
/// separately, in node order.
pub fn contour_integral<F>(contour: &Contour, integrand: F) -> Result<Vec<Matrix>>
where
    F: Fn(Complex64) -> Result<Vec<Matrix>> + Sync,
{
    let mut nodes = Vec::new();
    for circle in &contour.circles {
        let m = circle.nodes as f64;
        nodes.extend(circle.points().into_iter().map(|l| (l, (l - circle.center) / m)));
    }
    let values: Vec<Result<Vec<Matrix>>> = nodes.par_iter().map(|&(l, _)| integrand(l)).collect();
    let mut sums: Option<Vec<Matrix>> = None;
    for (value, &(_, w)) in values.into_iter().zip(&nodes) {
        let value = value?;
        let acc = sums.get_or_insert_with(|| value.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect());
        for (sum, term) in acc.iter_mut().zip(&value) {
            for (s, v) in sum.as_mut_slice().iter_mut().zip(term.as_slice()) {
                *s += w * v;
            }
        }
    }
    Ok(sums.unwrap_or_default())
}

/// `h(T) = (1/2 pi i) \oint h(l) (l - T)^{-1} dl` by the trapezoid rule.
pub fn calc_contour(t: &Matrix, h: &HoloFunction, contour: &Contour) -> Result<Matrix> {
    Ok(calc_contour_many(t, &[h], contour)?.remove(0))
}

/// Solves `A X - X B = C` for upper triangular `A`, `B` with disjoint spectra.
fn sylvester_upper(a: &Matrix, b: &Matrix, c: &Matrix) -> Matrix {
    let (p, q) = (a.rows(), b.rows());
    let mut x = Matrix::zeros(p, q);
    for j in 0..q {
        let mut rhs: Vec<Complex64> = (0..p).map(|i| c[(i, j)]).collect();
        for l in 0..j {
            let blj = b[(l, j)];
            if blj != ZERO {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r += x[(i, l)] * blj;
                }
            }
        }
        let shift = b[(j, j)];
        for i in (0..p).rev() {
            let mut acc = rhs[i];
            for k in i + 1..p {
                acc -= a[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = acc / (a[(i, i)] - shift);
        }
    }
    x
}

fn block(m: &Matrix, rows: (usize, usize), cols: (usize, usize)) -> Matrix {
    Matrix::from_fn(rows.1 - rows.0, cols.1 - cols.0, |i, j| m[(rows.0 + i, cols.0 + j)])
}

/// `h` on a diagonal block whose eigenvalues are clustered, by the Taylor
/// expansion about their mean evaluated with Horner's rule.
fn cluster_function(tb: &Matrix, h: &HoloFunction) -> Result<Matrix> {
    let m = tb.rows();
    if m == 1 {
        return Ok(Matrix::scalar(1, h.eval(tb[(0, 0)])?));
    }
    let mean = tb.trace() / m as f64;
    let len = m + 5 + h.polynomial_degree().unwrap_or(0);
    let coeffs = h.taylor(mean, len)?;
    let centered = tb.shift(mean);
    let mut acc = Matrix::scalar(m, coeffs[len - 1]);
    for &ck in coeffs[..len - 1].iter().rev() {
        acc = &acc * &centered;
        for i in 0..m {
            acc[(i, i)] += ck;
        }
    }
    Ok(acc)
}

/// Relative radius within which eigenvalues are grouped into one Taylor block.
pub const CLUSTER_REL: f64 = 1e-4;

/// `h(T)` by the block Schur-Parlett recurrence.
///
/// Eigenvalues within `CLUSTER_REL max(1, max|l|)` of each other
/// (transitively) form a cluster; each cluster is moved into a contiguous diagonal block whose
/// function is a truncated Taylor series about the cluster mean.
pub fn calc_triangular(t: &Matrix, h: &HoloFunction) -> Result<Matrix> {
    let n = t.ensure_square()?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let (mut u, mut r) = schur_unordered(t)?;
    let eigs = r.diag();
    for &l in &eigs {
        h.check_defined(l, 1e-9 * l.norm().max(1.0))?;
    }

    let delta = CLUSTER_REL * eigs.iter().map(|l| l.norm()).fold(1.0, f64::max);
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() <= delta {
                let (a, b) = (label[i], label[j]);
                if a != b {
                    let (lo, hi) = (a.min(b), a.max(b));
                    label.iter_mut().filter(|x| **x == hi).for_each(|x| *x = lo);
                }
            }
        }
    }
    // renumber clusters by first appearance
    let mut rank = vec![usize::MAX; n];
    let mut next = 0;
    let mut keys: Vec<usize> = label
        .iter()
        .map(|&l| {
            if rank[l] == usize::MAX {
                rank[l] = next;
                next += 1;
            }
            rank[l]
        })
        .collect();
    reorder_by_keys(&mut r, &mut u, &mut keys, |a, b| a < b);

    let mut bounds = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || keys[i] != keys[start] {
            bounds.push((start, i));
            start = i;
        }
    }
    if let Some(size) = bounds.iter().map(|&(s, e)| e - s).find(|&size| size > 8) {
        if !h.is_polynomial() {
            return Err(Error::ClusterTooLarge { size });
        }
    }

    let mut f = Matrix::zeros(n, n);
    let nb = bounds.len();
    let mut diag_blocks = Vec::with_capacity(nb);
    for &b in &bounds {
        let fb = cluster_function(&block(&r, b, b), h)?;
        for i in 0..b.1 - b.0 {
            for j in 0..b.1 - b.0 {
                f[(b.0 + i, b.0 + j)] = fb[(i, j)];
            }
        }
        diag_blocks.push(fb);
    }
    for jb in 1..nb {
        let bj = bounds[jb];
        for ib in (0..jb).rev() {
            let bi = bounds[ib];
            let t_ij = block(&r, bi, bj);
            let mut rhs = &(&diag_blocks[ib] * &t_ij) - &(&t_ij * &diag_blocks[jb]);
            for &bk in &bounds[ib + 1..jb] {
                let term = &(&block(&f, bi, bk) * &block(&r, bk, bj)) - &(&block(&r, bi, bk) * &block(&f, bk, bj));
                rhs = &rhs + &term;
            }
            let x = sylvester_upper(&block(&r, bi, bi), &block(&r, bj, bj), &rhs);
            for i in 0..x.rows() {
                for j in 0..x.cols() {
                    f[(bi.0 + i, bj.0 + j)] = x[(i, j)];
                }
            }
        }
    }
    Ok(f.expand(&u))
}

/// `h(N)` for normal `N` by unitary diagonalization.
pub fn calc_normal(n_matrix: &Matrix, h: &HoloFunction) -> Result<Matrix> {
    let n = n_matrix.ensure_square()?;
    let defect = n_matrix.normality_defect();
    let scale = n_matrix.norm_fro();
    if defect > 1e-8 * scale * scale {
        return Err(Error::NotNormal { residual: defect });
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let (u, r) = schur_unordered(n_matrix)?;
    let mut values = Vec::with_capacity(n);
    for l in r.diag() {
        h.check_defined(l, 1e-9 * l.norm().max(1.0))?;
        values.push(h.eval(l)?);
    }
    Ok(Matrix::from_diag(&values).expand(&u))
}
