//! `T = N + Q` with `N` normal, `Q` nilpotent and both sharing the Brown
//! measure-splitting flag of `T`.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flags::{exp_onto_flag_algebra, Flag};
use crate::linalg::{schur, solve, Matrix, OrderingTag};

/// Maximal flag whose basis is the ordered Schur basis of `t`.
///
/// The span of the first `k` columns is `t`-invariant and carries the first
/// `k` eigenvalues in `order`.
pub fn hs_flag(t: &Matrix, order: OrderingTag) -> Result<Flag> {
    Flag::maximal(schur(t, order)?.u)
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub n_part: Matrix,
    pub q_part: Matrix,
    pub flag: Flag,
    pub order: OrderingTag,
    /// Upper triangular form of `t` in the flag basis.
    pub triangular: Matrix,
}

impl Decomposition {
    /// `N + Q`, which reproduces the input up to one rounding per entry.
    pub fn reconstruct(&self) -> Matrix {
        &self.n_part + &self.q_part
    }
}

impl Serialize for Decomposition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Decomposition", 4)?;
        s.serialize_field("N", &self.n_part)?;
        s.serialize_field("Q", &self.q_part)?;
        s.serialize_field("flag", &self.flag)?;
        s.serialize_field("order", self.order.name())?;
        s.end()
    }
}

/// `N = Exp_D(T)` for the maximal ordered Schur flag, `Q = T - N`.
pub fn decompose(t: &Matrix, order: OrderingTag) -> Result<Decomposition> {
    t.ensure_square()?;
    let form = schur(t, order)?;
    let flag = Flag::maximal(form.u.clone())?;
    let n_part = exp_onto_flag_algebra(t, &flag);
    let q_part = t - &n_part;
    Ok(Decomposition {
        n_part,
        q_part,
        flag,
        order: form.order,
        triangular: form.r,
    })
}

/// `N^{-1} Q`, so that `T = N (I + N^{-1} Q)`.
pub fn multiplicative_form(d: &Decomposition) -> Result<Matrix> {
    let scale = d.reconstruct().norm_fro();
    let min_modulus = d.triangular.diag().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if min_modulus < 1e-8 * scale {
        return Err(Error::ZeroInSupport { min_modulus });
    }
    solve(&d.n_part, &d.q_part)
}
