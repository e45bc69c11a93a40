//! Complex Schur decomposition `T = U R U*` with optional eigenvalue ordering.
//!
//! Householder reduction to Hessenberg form, single-shift QR sweeps with
//! Wilkinson shifts and deflation, and finally reordering of the triangular
//! factor by unitary swaps of adjacent diagonal entries.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Matrix, ZERO};
use crate::error::{Error, Result};

type Comparator = dyn Fn(&Complex64, &Complex64) -> Ordering + Send + Sync;

/// Order in which eigenvalues appear along the diagonal of the Schur factor.
#[derive(Clone, Default)]
pub enum OrderingTag {
    /// Increasing modulus, ties broken by increasing argument in `(-pi, pi]`.
    #[default]
    ModulusArgument,
    /// Increasing real part, ties broken by increasing imaginary part.
    RealImag,
    /// A caller supplied total order.
    Custom(Arc<Comparator>),
}

impl OrderingTag {
    pub fn custom(f: impl Fn(&Complex64, &Complex64) -> Ordering + Send + Sync + 'static) -> Self {
        OrderingTag::Custom(Arc::new(f))
    }

    /// Name used in serialized output.
    pub fn name(&self) -> &'static str {
        match self {
            OrderingTag::ModulusArgument => "modulus",
            OrderingTag::RealImag => "real-imag",
            OrderingTag::Custom(_) => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "modulus" | "modulus-argument" => Some(OrderingTag::ModulusArgument),
            "real-imag" | "real" => Some(OrderingTag::RealImag),
            _ => None,
        }
    }

    /// Compares two eigenvalues; keys closer than `tie` compare equal.
    pub fn compare(&self, a: &Complex64, b: &Complex64, tie: f64) -> Ordering {
        let within = |x: f64, y: f64| (x - y).abs() <= tie;
        let cmp_f = |x: f64, y: f64| x.partial_cmp(&y).unwrap_or(Ordering::Equal);
        match self {
            OrderingTag::ModulusArgument => {
                let (ma, mb) = (a.norm(), b.norm());
                if !within(ma, mb) {
                    cmp_f(ma, mb)
                } else if (a - b).norm() <= tie {
                    Ordering::Equal
                } else {
                    cmp_f(a.arg(), b.arg())
                }
            }
            OrderingTag::RealImag => {
                if !within(a.re, b.re) {
                    cmp_f(a.re, b.re)
                } else if within(a.im, b.im) {
                    Ordering::Equal
                } else {
                    cmp_f(a.im, b.im)
                }
            }
            OrderingTag::Custom(f) => f(a, b),
        }
    }
}

impl fmt::Debug for OrderingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for OrderingTag {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (OrderingTag::ModulusArgument, OrderingTag::ModulusArgument) => true,
            (OrderingTag::RealImag, OrderingTag::RealImag) => true,
            (OrderingTag::Custom(a), OrderingTag::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// `T = U R U*` with `U` unitary and `R` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub u: Matrix,
    pub r: Matrix,
    pub order: OrderingTag,
}

impl SchurForm {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.r.diag()
    }

    /// `U R U*`.
    pub fn reconstruct(&self) -> Matrix {
        self.r.expand(&self.u)
    }
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with
/// `G [f; g] = [r; 0]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Givens {
    c: f64,
    s: Complex64,
}

impl Givens {
    pub(crate) fn new(f: Complex64, g: Complex64) -> Self {
        if g == ZERO {
            return Self { c: 1.0, s: ZERO };
        }
        if f == ZERO {
            return Self {
                c: 0.0,
                s: g.conj() / g.norm(),
            };
        }
        let fa = f.norm();
        let norm = fa.hypot(g.norm());
        Self {
            c: fa / norm,
            s: (f / fa) * g.conj() / norm,
        }
    }

    /// Rows `k, k+1` of `m` (columns `from..`) are replaced by `G` applied to them.
    pub(crate) fn rotate_rows(&self, m: &mut Matrix, k: usize, from: usize) {
        for j in from..m.cols() {
            let x = m[(k, j)];
            let y = m[(k + 1, j)];
            m[(k, j)] = x * self.c + self.s * y;
            m[(k + 1, j)] = -self.s.conj() * x + y * self.c;
        }
    }

    /// Columns `k, k+1` of `m` (rows `..to`) are multiplied on the right by `G*`.
    pub(crate) fn rotate_cols(&self, m: &mut Matrix, k: usize, to: usize) {
        for i in 0..to {
            let x = m[(i, k)];
            let y = m[(i, k + 1)];
            m[(i, k)] = x * self.c + y * self.s.conj();
            m[(i, k + 1)] = -x * self.s + y * self.c;
        }
    }
}

/// Reduces `h` to upper Hessenberg form in place, accumulating into `u`.
fn hessenberg(h: &mut Matrix, u: &mut Matrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let alpha: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0 == ZERO { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        // v = x + phase * alpha * e1, H = I - 2 v v* / (v* v)
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] += phase * alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        let beta = 2.0 / vnorm2;

        // left: rows k+1.., all columns
        for j in 0..n {
            let mut s = ZERO;
            for i in k + 1..n {
                s += v[i].conj() * h[(i, j)];
            }
            s *= beta;
            for i in k + 1..n {
                let d = v[i] * s;
                h[(i, j)] -= d;
            }
        }
        // right: columns k+1.., all rows
        for m in [&mut *h, &mut *u] {
            for i in 0..n {
                let mut s = ZERO;
                for j in k + 1..n {
                    s += m[(i, j)] * v[j];
                }
                s *= beta;
                for j in k + 1..n {
                    let d = s * v[j].conj();
                    m[(i, j)] -= d;
                }
            }
        }
        h[(k + 1, k)] = -phase * alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let mu1 = mean + disc;
    let mu2 = mean - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Shifted QR iteration on an upper Hessenberg matrix, producing an upper
/// triangular `h` and accumulating the similarity into `u`.
fn hessenberg_qr(h: &mut Matrix, u: &mut Matrix) -> Result<()> {
    let n = h.rows();
    if n < 2 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let small = f64::MIN_POSITIVE * (n as f64) / eps;
    let max_sweeps = 30 * n;
    let mut sweeps = 0usize;
    let mut hi = n - 1;
    let mut since_deflation = 0usize;

    while hi > 0 {
        // locate start of the unreduced trailing block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut tst = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if tst == 0.0 {
                if lo >= 2 {
                    tst += h[(lo - 1, lo - 2)].norm();
                }
                if lo < hi {
                    tst += h[(lo + 1, lo)].norm();
                }
            }
            if sub <= small || sub <= eps * tst {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            return Err(Error::NonConvergence { sweeps: max_sweeps });
        }

        let mu = if since_deflation % 11 == 10 {
            // exceptional shift breaks symmetric cycles
            let s = h[(hi, hi - 1)].norm() + if hi >= 2 { h[(hi - 1, hi - 2)].norm() } else { 0.0 };
            h[(hi, hi)] + Complex64::new(0.75 * s, 0.41 * s)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for i in lo..=hi {
            h[(i, i)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let g = Givens::new(h[(k, k)], h[(k + 1, k)]);
            g.rotate_rows(h, k, k);
            h[(k + 1, k)] = ZERO;
            rotations.push(g);
        }
        for (idx, g) in rotations.iter().enumerate() {
            let k = lo + idx;
            g.rotate_cols(h, k, (k + 2).min(hi + 1));
            g.rotate_cols(u, k, n);
        }
        for i in lo..=hi {
            h[(i, i)] += mu;
        }
    }

    // scrub the strictly lower part, which holds only rounding residue
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Unitary `V` and upper Hessenberg `H` with `T = V H V*`.
pub(crate) fn hessenberg_form(t: &Matrix) -> (Matrix, Matrix) {
    let mut h = t.clone();
    let mut v = Matrix::identity(t.rows());
    hessenberg(&mut h, &mut v);
    (v, h)
}

/// Unordered Schur factors of a square matrix.
pub(crate) fn schur_unordered(t: &Matrix) -> Result<(Matrix, Matrix)> {
    let n = t.ensure_square()?;
    if !t.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut h = t.clone();
    let mut u = Matrix::identity(n);
    hessenberg(&mut h, &mut u);
    hessenberg_qr(&mut h, &mut u)?;
    Ok((u, h))
}

/// Swaps diagonal entries `k` and `k + 1` of upper triangular `r` by a unitary
/// similarity, accumulating it into `u`.
pub(crate) fn swap_adjacent(r: &mut Matrix, u: &mut Matrix, k: usize) {
    let n = r.rows();
    let a = r[(k, k)];
    let b = r[(k + 1, k + 1)];
    let g = Givens::new(r[(k, k + 1)], b - a);
    g.rotate_rows(r, k, k);
    g.rotate_cols(r, k, k + 2);
    g.rotate_cols(u, k, n);
    r[(k + 1, k)] = ZERO;
    r[(k, k)] = b;
    r[(k + 1, k + 1)] = a;
}

/// Stable insertion sort of the diagonal of `r` by per-position keys.
///
/// `precedes(x, y)` must return true only when `x` belongs strictly before
/// `y`; equal keys are never swapped, so the original order breaks ties.
pub(crate) fn reorder_by_keys<K>(
    r: &mut Matrix,
    u: &mut Matrix,
    keys: &mut [K],
    precedes: impl Fn(&K, &K) -> bool,
) {
    for i in 1..keys.len() {
        let mut j = i;
        while j > 0 && precedes(&keys[j], &keys[j - 1]) {
            swap_adjacent(r, u, j - 1);
            keys.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// Reorders an existing Schur form so its diagonal follows `order`.
///
/// Eigenvalues within `1e-9 * ||R||_F` of each other are treated as tied and
/// keep their relative position.
pub fn reorder_schur(form: &mut SchurForm, order: OrderingTag) {
    let tie = 1e-9 * form.r.norm_fro();
    let mut keys = form.r.diag();
    reorder_by_keys(&mut form.r, &mut form.u, &mut keys, |x, y| {
        order.compare(x, y, tie) == Ordering::Less
    });
    form.order = order;
}

/// Ordered complex Schur decomposition of `t`.
pub fn schur(t: &Matrix, order: OrderingTag) -> Result<SchurForm> {
    let (u, r) = schur_unordered(t)?;
    let mut form = SchurForm {
        u,
        r,
        order: OrderingTag::default(),
    };
    let tie = 1e-9 * t.norm_fro();
    let mut keys = form.r.diag();
    reorder_by_keys(&mut form.r, &mut form.u, &mut keys, |x, y| {
        order.compare(x, y, tie) == Ordering::Less
    });
    form.order = order;
    Ok(form)
}

/// Eigenvalues with multiplicity, in no particular order.
pub fn eigenvalues(t: &Matrix) -> Result<Vec<Complex64>> {
    Ok(schur_unordered(t)?.1.diag())
}
