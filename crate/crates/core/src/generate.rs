//! Seeded random instances.
//!
//! Every generator draws from a ChaCha8 stream seeded with a `u64`, so an
//! instance is a pure function of `(kind, n, seed)`. The kinds:
//!
//! * `triangular`: `U (D + S) U*` with `D` a random diagonal in the disk of
//!   radius 1.5, `S` strictly upper with complex Gaussian entries of scale
//!   `0.5 / sqrt(n)`, and `U` Haar-random unitary.
//! * `spectral`: `U D U*`, a normal matrix with planted spectrum.
//! * `commuting-pair`: `N = U D U*` with repeated eigenvalues and
//!   `Q = U S U*` where `S` is strictly upper inside each eigenvalue block of
//!   `D`, so that `NQ = QN` and `Q` is nilpotent.
//! * `near-defective`: like `triangular`, but the diagonal contains pairs of
//!   eigenvalues whose gaps are drawn log-uniformly from `[2e-4, 5e-3]`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Matrix;

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 mixing of a root seed with a stream index.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Triangular,
    Spectral,
    CommutingPair,
    NearDefective,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Triangular => "triangular",
            Kind::Spectral => "spectral",
            Kind::CommutingPair => "commuting-pair",
            Kind::NearDefective => "near-defective",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "triangular" => Ok(Kind::Triangular),
            "spectral" => Ok(Kind::Spectral),
            "commuting-pair" => Ok(Kind::CommutingPair),
            "near-defective" => Ok(Kind::NearDefective),
            other => Err(format!("unknown instance kind `{other}`")),
        }
    }
}

/// A generated matrix together with the factors it was built from.
#[derive(Debug, Clone)]
pub struct Planted {
    /// `basis * triangular * basis*`.
    pub matrix: Matrix,
    pub basis: Matrix,
    pub triangular: Matrix,
}

pub fn complex_normal<R: Rng>(rng: &mut R, scale: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * (scale / std::f64::consts::SQRT_2)
}

/// Matrix with i.i.d. complex Gaussian entries of the given scale.
pub fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| complex_normal(rng, scale))
}

/// Uniform point in the disk of the given radius.
pub fn point_in_disk<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
    Complex64::from_polar(r, theta)
}

/// Haar-distributed unitary: Gram-Schmidt (applied twice) on a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let g = gaussian(rng, n, n, 1.0);
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| g.column(j)).collect();
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let proj: Complex64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let (head, tail) = cols.split_at_mut(j);
                for (x, y) in tail[0].iter_mut().zip(&head[k]) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Strictly upper triangular Gaussian matrix.
pub fn strictly_upper<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = complex_normal(rng, scale);
        }
    }
    m
}

fn plant<R: Rng>(rng: &mut R, triangular: Matrix) -> Planted {
    let basis = random_unitary(rng, triangular.rows());
    Planted {
        matrix: triangular.expand(&basis),
        basis,
        triangular,
    }
}

pub fn triangular_with_diag<R: Rng>(rng: &mut R, diag: &[Complex64], upper_scale: f64) -> Planted {
    let n = diag.len();
    let mut r = strictly_upper(rng, n, upper_scale);
    for (i, &d) in diag.iter().enumerate() {
        r[(i, i)] = d;
    }
    plant(rng, r)
}

pub fn triangular<R: Rng>(rng: &mut R, n: usize) -> Planted {
    let diag: Vec<Complex64> = (0..n).map(|_| point_in_disk(rng, 1.5)).collect();
    triangular_with_diag(rng, &diag, 0.5 / (n as f64).sqrt())
}

pub fn spectral<R: Rng>(rng: &mut R, n: usize) -> Planted {
    let diag: Vec<Complex64> = (0..n).map(|_| point_in_disk(rng, 1.5)).collect();
    plant(rng, Matrix::from_diag(&diag))
}

pub fn near_defective<R: Rng>(rng: &mut R, n: usize) -> Planted {
    // well separated anchors on a jittered circle, then every other anchor
    // receives a close partner
    let anchors = n.div_ceil(2);
    let mut diag = Vec::with_capacity(n);
    for k in 0..anchors {
        let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.3 * rng.random::<f64>()) / anchors as f64;
        let radius = 0.6 + 0.8 * rng.random::<f64>();
        let a = Complex64::from_polar(radius, theta);
        diag.push(a);
        if diag.len() < n {
            let log_gap = (2e-4f64).ln() + rng.random::<f64>() * ((5e-3f64).ln() - (2e-4f64).ln());
            let dir = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            diag.push(a + Complex64::from_polar(log_gap.exp(), dir));
        }
    }
    triangular_with_diag(rng, &diag, 0.1 / (n as f64).sqrt())
}

/// Commuting normal / nilpotent pair, returned as `(N, Q, basis)`.
pub fn commuting_pair<R: Rng>(rng: &mut R, n: usize) -> (Matrix, Matrix, Matrix) {
    commuting_pair_with(rng, n, |rng| point_in_disk(rng, 1.5))
}

/// [`commuting_pair`] with block eigenvalues taken from `values`, each used
/// once per pass through a fresh shuffle.
pub fn commuting_pair_on<R: Rng>(rng: &mut R, n: usize, values: &[Complex64]) -> (Matrix, Matrix, Matrix) {
    let mut pool: Vec<Complex64> = Vec::new();
    commuting_pair_with(rng, n, |rng| {
        if pool.is_empty() {
            pool = values.to_vec();
            pool.shuffle(rng);
        }
        pool.pop().expect("values is nonempty")
    })
}

fn commuting_pair_with<R: Rng>(
    rng: &mut R,
    n: usize,
    mut value_of: impl FnMut(&mut R) -> Complex64,
) -> (Matrix, Matrix, Matrix) {
    let mut d = Matrix::zeros(n, n);
    let mut s = Matrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let size = rng.random_range(1..=3usize).min(n - start);
        let value = value_of(rng);
        for i in start..start + size {
            d[(i, i)] = value;
            for j in i + 1..start + size {
                s[(i, j)] = complex_normal(rng, 0.7);
            }
        }
        start += size;
    }
    let basis = random_unitary(rng, n);
    (d.expand(&basis), s.expand(&basis), basis)
}

/// Commuting pair `(A, Q)` with `Q` strictly upper triangular and
/// `A = c0 + c1 Q + c2 Q^2` scaled to `||A||_2 = 1`.
///
/// The superdiagonal of `Q` has moduli in `[0.8, 1.2]` and dominates the
/// remaining entries (scale `0.2 / sqrt(n)`), so the nonzero singular values
/// of every power `Q^m` stay well above rounding level.
pub fn aq_pair<R: Rng>(rng: &mut R, n: usize) -> (Matrix, Matrix) {
    let mut q = strictly_upper(rng, n, 0.2 / (n as f64).sqrt());
    for i in 0..n.saturating_sub(1) {
        let modulus = 0.8 + 0.4 * rng.random::<f64>();
        q[(i, i + 1)] = Complex64::from_polar(modulus, rng.random::<f64>() * 2.0 * std::f64::consts::PI);
    }
    let c0 = Complex64::from_polar(0.5 + 0.5 * rng.random::<f64>(), rng.random::<f64>() * 2.0 * std::f64::consts::PI);
    let c1 = complex_normal(rng, 0.3);
    let c2 = complex_normal(rng, 0.1);
    let q2 = &q * &q;
    let mut a = &q.scale(c1) + &q2.scale(c2);
    for i in 0..n {
        a[(i, i)] += c0;
    }
    let norm = a.norm2();
    (a.scale_real(1.0 / norm), q)
}

/// Minimum pairwise distance between entries.
pub fn min_gap(values: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;

    #[test]
    fn unitary_is_unitary() {
        let u = random_unitary(&mut rng(3), 12);
        let err = (&(&u.adjoint() * &u) - &Matrix::identity(12)).norm_fro();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn instances_are_reproducible() {
        let a = triangular(&mut rng(7), 8).matrix;
        let b = triangular(&mut rng(7), 8).matrix;
        assert_eq!(a, b);
        assert_ne!(a, triangular(&mut rng(8), 8).matrix);
    }

    #[test]
    fn near_defective_gap_is_planted() {
        for seed in 0..20 {
            let inst = near_defective(&mut rng(seed), 4);
            let gap = min_gap(&eigenvalues(&inst.matrix).unwrap());
            assert!((1e-4..=1e-2).contains(&gap), "seed {seed}: gap {gap}");
        }
    }

    #[test]
    fn commuting_pair_commutes() {
        let (n, q, _) = commuting_pair(&mut rng(1), 9);
        let c = n.commutator(&q).norm_fro();
        assert!(c < 1e-13 * (n.norm_fro() * q.norm_fro()).max(1.0));
    }

    #[test]
    fn aq_pair_commutes_and_is_normalized() {
        let (a, q) = aq_pair(&mut rng(4), 10);
        assert!(a.commutator(&q).norm_fro() < 1e-14);
        assert!((a.norm2() - 1.0).abs() < 1e-12);
        assert_eq!(q.lower_norm(), 0.0);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }
}
