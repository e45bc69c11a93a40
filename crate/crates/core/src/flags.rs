//! Orthogonal projections, flags of projections, corners and the two
//! conditional expectations attached to a flag.

use serde::{Deserialize, Serialize};

use crate::error::{Corner, Error, Result};
use crate::linalg::{hermitian_eigen, inverse, Matrix, ONE, ZERO};

/// Default relative tolerance for `(1 - p) T p = 0`.
pub const INVARIANCE_TOL: f64 = 1e-8;

/// An orthogonal projection together with a unitary frame whose first
/// `rank` columns span its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    matrix: Matrix,
    rank: usize,
    frame: Matrix,
}

impl Projection {
    /// Projection onto the span of the first `rank` columns of a unitary.
    pub fn from_frame(frame: &Matrix, rank: usize) -> Result<Self> {
        let n = frame.ensure_square()?;
        if rank > n {
            return Err(Error::InvalidProjection {
                reason: format!("rank {rank} exceeds dimension {n}"),
            });
        }
        let range = frame.columns(0..rank);
        let matrix = &range * &range.adjoint();
        Ok(Self {
            matrix,
            rank,
            frame: frame.clone(),
        })
    }

    /// Projection onto the first `rank` coordinates.
    pub fn coordinate(n: usize, rank: usize) -> Result<Self> {
        Self::from_frame(&Matrix::identity(n), rank)
    }

    /// Validates `P = P* = P^2` and derives a frame from the eigenvectors.
    pub fn from_matrix(p: &Matrix) -> Result<Self> {
        let n = p.ensure_square()?;
        let idem = (&(p * p) - p).norm_fro();
        if idem > 1e-10 {
            return Err(Error::InvalidProjection {
                reason: format!("||P^2 - P||_F = {idem:e}"),
            });
        }
        let herm = (p - &p.adjoint()).norm_fro();
        if herm > 1e-12 {
            return Err(Error::InvalidProjection {
                reason: format!("||P - P*||_F = {herm:e}"),
            });
        }
        let trace = p.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > 1e-8 || rank < 0.0 {
            return Err(Error::InvalidProjection {
                reason: format!("trace {trace} is not an integer"),
            });
        }
        let (_, vecs) = hermitian_eigen(p)?;
        // ascending eigenvalues: the range sits in the last columns
        let frame = Matrix::from_fn(n, n, |i, j| vecs[(i, n - 1 - j)]);
        Ok(Self {
            matrix: p.clone(),
            rank: rank as usize,
            frame,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    /// `n x rank` orthonormal basis of the range.
    pub fn range(&self) -> Matrix {
        self.frame.columns(0..self.rank)
    }

    /// `n x (n - rank)` orthonormal basis of the kernel.
    pub fn kernel(&self) -> Matrix {
        self.frame.columns(self.rank..self.dim())
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 || self.rank == self.dim()
    }

    /// `1 - p`, with the frame rotated so its range comes first.
    pub fn complement(&self) -> Projection {
        let n = self.dim();
        let frame = Matrix::from_fn(n, n, |i, j| self.frame[(i, (j + self.rank) % n)]);
        Projection {
            matrix: &Matrix::identity(n) - &self.matrix,
            rank: n - self.rank,
            frame,
        }
    }
}

/// An increasing chain of projections `p_j` onto the spans of the first
/// `cuts[j]` columns of a unitary basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    basis: Matrix,
    cuts: Vec<usize>,
}

impl Flag {
    pub fn new(basis: Matrix, cuts: Vec<usize>) -> Result<Self> {
        let n = basis.ensure_square()?;
        if cuts.first() != Some(&0) || cuts.last() != Some(&n) {
            return Err(Error::InvalidFlag {
                reason: format!("cuts must run from 0 to {n}"),
            });
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFlag {
                reason: "cuts must be strictly increasing".into(),
            });
        }
        let defect = (&(&basis.adjoint() * &basis) - &Matrix::identity(n)).norm_fro();
        if defect > 1e-12 * (n as f64).sqrt().max(1.0) {
            return Err(Error::InvalidFlag {
                reason: format!("basis is not unitary (defect {defect:e})"),
            });
        }
        Ok(Self { basis, cuts })
    }

    /// Cuts at every index.
    pub fn maximal(basis: Matrix) -> Result<Self> {
        let n = basis.ensure_square()?;
        Self::new(basis, (0..=n).collect())
    }

    /// `0 <= 1` only.
    pub fn trivial(n: usize) -> Self {
        Self {
            basis: Matrix::identity(n),
            cuts: vec![0, n],
        }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Number of blocks `m`.
    pub fn blocks(&self) -> usize {
        self.cuts.len() - 1
    }

    /// `p_j` for `j = 0..=m`.
    pub fn projection(&self, j: usize) -> Projection {
        Projection::from_frame(&self.basis, self.cuts[j]).expect("cut within dimension")
    }

    /// Same basis, cuts restricted to the given subset (which must contain
    /// 0 and n).
    pub fn coarsen(&self, cuts: Vec<usize>) -> Result<Self> {
        if cuts.iter().any(|c| !self.cuts.contains(c)) {
            return Err(Error::InvalidFlag {
                reason: "coarser cuts must be a subset of the existing ones".into(),
            });
        }
        Self::new(self.basis.clone(), cuts)
    }

    /// Largest [`is_invariant`] residual over all members of the flag.
    pub fn invariance_residual(&self, t: &Matrix) -> f64 {
        let form = t.compress(&self.basis);
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for &k in &self.cuts[1..self.cuts.len() - 1] {
            let mut s = 0.0;
            for i in k..n {
                for j in 0..k {
                    s += form[(i, j)].norm_sqr();
                }
            }
            worst = worst.max(s.sqrt());
        }
        worst / t.norm_fro().max(1.0)
    }
}

/// `(residual <= tol, residual)` with residual `||(1-P) T P||_F / max(1, ||T||_F)`.
pub fn is_invariant(t: &Matrix, p: &Projection, tol: f64) -> (bool, f64) {
    let residual = invariance_residual(t, p);
    (residual <= tol, residual)
}

fn invariance_residual(t: &Matrix, p: &Projection) -> f64 {
    let leak = &(&p.kernel().adjoint() * t) * &p.range();
    leak.norm_fro() / t.norm_fro().max(1.0)
}

/// `pTp` as a `rank x rank` matrix in the frame of `p`.
pub fn corner(t: &Matrix, p: &Projection) -> Matrix {
    t.compress(&p.range())
}

/// `W X W*` for `W` the range basis of `p`: a corner operator viewed in the
/// ambient algebra.
pub fn embed(x: &Matrix, p: &Projection) -> Matrix {
    x.expand(&p.range())
}

/// `T^{-1}` assembled from the corners of an invariant projection:
/// `[[a, b], [0, c]]^{-1} = [[a^{-1}, -a^{-1} b c^{-1}], [0, c^{-1}]]`.
pub fn block_inverse(t: &Matrix, p: &Projection) -> Result<Matrix> {
    let n = t.ensure_square()?;
    if p.dim() != n {
        return Err(Error::DimensionMismatch { left: n, right: p.dim() });
    }
    let residual = invariance_residual(t, p);
    if residual > INVARIANCE_TOL {
        return Err(Error::NotInvariant { residual });
    }
    let k = p.rank();
    let form = t.compress(p.frame());
    let sub = |r0: usize, r1: usize, c0: usize, c1: usize| Matrix::from_fn(r1 - r0, c1 - c0, |i, j| form[(r0 + i, c0 + j)]);
    let a = sub(0, k, 0, k);
    let b = sub(0, k, k, n);
    let c = sub(k, n, k, n);
    let inv_or = |m: &Matrix, corner: Corner| {
        if m.rows() == 0 {
            Ok(Matrix::zeros(0, 0))
        } else {
            inverse(m).map_err(|_| Error::SingularCorner { corner })
        }
    };
    let ai = inv_or(&a, Corner::Upper)?;
    let ci = inv_or(&c, Corner::Lower)?;
    let off = &(&ai * &b) * &ci;
    let mut x = Matrix::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            x[(i, j)] = ai[(i, j)];
        }
        for j in k..n {
            x[(i, j)] = -off[(i, j - k)];
        }
    }
    for i in k..n {
        for j in k..n {
            x[(i, j)] = ci[(i - k, j - k)];
        }
    }
    Ok(x.expand(p.frame()))
}

fn block_of(cuts: &[usize], idx: usize) -> usize {
    cuts.partition_point(|&c| c <= idx) - 1
}

/// `Exp_{D'}(T) = sum_j (p_j - p_{j-1}) T (p_j - p_{j-1})`: the
/// block-diagonal compression in the flag basis.
pub fn exp_onto_blocks(t: &Matrix, f: &Flag) -> Matrix {
    let mut form = t.compress(f.basis());
    let n = f.dim();
    for i in 0..n {
        for j in 0..n {
            if block_of(f.cuts(), i) != block_of(f.cuts(), j) {
                form[(i, j)] = ZERO;
            }
        }
    }
    form.expand(f.basis())
}

/// `Exp_D(T)` onto the algebra spanned by the differences `p_j - p_{j-1}`:
/// each diagonal block is replaced by its normalized trace times the identity.
pub fn exp_onto_flag_algebra(t: &Matrix, f: &Flag) -> Matrix {
    let form = t.compress(f.basis());
    let n = f.dim();
    let mut out = Matrix::zeros(n, n);
    for w in f.cuts().windows(2) {
        let (s, e) = (w[0], w[1]);
        let mean = (s..e).map(|i| form[(i, i)]).sum::<num_complex::Complex64>() / (e - s) as f64;
        for i in s..e {
            out[(i, i)] = mean * ONE;
        }
    }
    out.expand(f.basis())
}
