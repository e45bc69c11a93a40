use num_complex::Complex64;

use super::{CheckResult, Config};
use crate::decomp::{decompose, multiplicative_form};
use crate::error::{Error, Result};
use crate::flags::{block_inverse, corner, embed, exp_onto_blocks, is_invariant, Flag, Projection, INVARIANCE_TOL};
use crate::generate::{point_in_disk, rng};
use crate::holo::{calc_contour, calc_normal, calc_triangular, contour_for, contour_integral, HoloFunction};
use crate::linalg::{
    condition_number, eigenvalues, hermitian_eigen, inverse, match_multisets, psd_gram_power, Matrix, ZERO,
};
use crate::tracial::{
    brown_measure, fk_determinant, is_nilpotent, null_staircase, nilpotency_witness_in, pushforward,
    NilpotencyWitness,
};

/// Largest condition number used in a cond-factor.
pub const COND_CAP: f64 = 1e6;

/// `1 + min(cond_1(a), COND_CAP)`.
pub fn cond_factor(a: &Matrix) -> f64 {
    1.0 + condition_number(a).min(COND_CAP)
}

fn record_witness(out: &mut CheckResult, prefix: &str, w: &NilpotencyWitness, scale: f64, tol: f64) {
    out.residual(&format!("{prefix}spectral_radius"), w.spectral_radius / scale, tol);
    out.residual(&format!("{prefix}lower_residual"), w.lower_residual / scale, tol);
    out.metric(&format!("{prefix}power_root"), w.power_root);
}

fn ensure_commuting(a: &Matrix, q: &Matrix, rel: f64) -> Result<f64> {
    let residual = a.commutator(q).norm_fro();
    if residual > rel * a.norm_fro() * q.norm_fro() {
        return Err(Error::NotCommuting { residual });
    }
    Ok(residual)
}

fn ensure_flag_invariant(t: &Matrix, f: &Flag) -> Result<()> {
    let residual = f.invariance_residual(t);
    if residual > INVARIANCE_TOL {
        return Err(Error::NotInvariant { residual });
    }
    Ok(())
}

/// `h(T) = h(N) + Q_h` with `Q_h` nilpotent and strictly upper triangular in
/// the flag basis of the decomposition, plus the Brown push-forward identity
/// `nu_{h(T)} = h_* nu_T`.
///
/// `h(T)` is computed twice, by quadrature and by Schur-Parlett, and the two
/// must agree. Residuals are relative to `max(1, ||h(T)||_F)`.
pub fn check_theorem_i(t: &Matrix, h: &HoloFunction, cfg: &Config) -> Result<CheckResult> {
    let mut out = CheckResult::new("theorem_i");
    let d = decompose(t, cfg.order.clone())?;
    let ht = calc_triangular(t, h)?;
    let contour = contour_for(&[t, &d.n_part], h, cfg.nodes)?;
    let hc = calc_contour(t, h, &contour)?;
    let hn = calc_normal(&d.n_part, h)?;
    let scale = ht.norm_fro().max(1.0);
    out.residual("oracle", (&hc - &ht).norm_fro() / scale, cfg.tol(1e-8));

    let qh = &ht - &hn;
    let w = nilpotency_witness_in(&qh, d.flag.basis())?;
    record_witness(&mut out, "", &w, scale, cfg.tol(1e-8));

    let image = brown_measure(&ht)?;
    let pushed = pushforward(&brown_measure(t)?, h)?;
    out.residual("brown_pushforward", image.distance(&pushed) / scale, cfg.tol(1e-6));
    out.metric("norm_q_h", qh.norm_fro());
    Ok(out.with_replay(&[("T", t), ("h(T)", &ht), ("N", &d.n_part)]))
}

/// `T = N (I + N^{-1} Q)` with `N^{-1} Q` nilpotent in the flag basis.
pub fn check_theorem_ii(t: &Matrix, cfg: &Config) -> Result<CheckResult> {
    let mut out = CheckResult::new("theorem_ii");
    let d = decompose(t, cfg.order.clone())?;
    let m = multiplicative_form(&d)?;
    let n = t.rows();
    let rebuilt = &d.n_part * &(&Matrix::identity(n) + &m);
    out.residual("reconstruction", rebuilt.rel_dist(t, f64::MIN_POSITIVE), cfg.tol(1e-9));
    let w = nilpotency_witness_in(&m, d.flag.basis())?;
    record_witness(&mut out, "", &w, m.norm_fro().max(1.0), cfg.tol(1e-8));
    Ok(out.with_replay(&[("T", t), ("N", &d.n_part), ("Q", &d.q_part)]))
}

/// `T^{-1} = N^{-1} - T^{-1} Q N^{-1}` for `T = N + Q`, relative to
/// `||T^{-1}||_F`. No commutation is needed.
pub fn check_lemma_invs(n: &Matrix, q: &Matrix, cfg: &Config) -> Result<CheckResult> {
    let mut out = CheckResult::new("lemma_invs");
    let t = n.try_add(q)?;
    let ti = inverse(&t)?;
    let ni = inverse(n)?;
    let rhs = &ni - &(&(&ti * q) * &ni);
    out.residual("identity", rhs.rel_dist(&ti, f64::MIN_POSITIVE), cfg.tol(1e-9));
    out.metric("cond_t", condition_number(&t));
    Ok(out.with_replay(&[("N", n), ("Q", q)]))
}

/// `AQ` is nilpotent when `A` commutes with nilpotent `Q`, together with
/// the operator monotone step
/// `((AQ)^m* (AQ)^m)^{2/m} <= ||A||^4 (Q^m* Q^m)^{2/m}` for `m = 2..n`.
///
/// The inequality is unitarily invariant, so it is evaluated in a basis
/// where `Q` is strictly upper triangular, with the entries that vanish for
/// exactly nilpotent `Q` set to zero. Rounding-level values there would
/// otherwise be raised to the power `2/m` and swamp the comparison.
pub fn check_lemma_aq(a: &Matrix, q: &Matrix, cfg: &Config) -> Result<CheckResult> {
    let mut out = CheckResult::new("lemma_aq");
    let n = q.ensure_square()?;
    let commutator = ensure_commuting(a, q, 1e-10)?;
    let (nil, wq) = is_nilpotent(q, 1e-8)?;
    if !nil {
        return Err(Error::NotNilpotent {
            spectral_radius: wq.spectral_radius.max(wq.lower_residual),
        });
    }
    let basis = if q.lower_norm() == 0.0 {
        Matrix::identity(n)
    } else {
        null_staircase(q)?
    };
    let aq = a * q;
    let w = nilpotency_witness_in(&aq, &basis)?;
    record_witness(&mut out, "", &w, aq.norm_fro().max(1.0), cfg.tol(1e-8));

    let qb = strict_upper(&q.compress(&basis), 1);
    let ab = strict_upper(&a.compress(&basis), 0);
    let defect = loewner_defect(&ab, &qb, ab.norm2())?;
    out.residual("loewner_defect", defect, cfg.tol(1e-8));
    out.metric("commutator", commutator);
    Ok(out.with_replay(&[("A", a), ("Q", q)]))
}

/// `max(0, -min eig(a_norm^4 (Q^m* Q^m)^{2/m} - ((AQ)^m* (AQ)^m)^{2/m}))`
/// over `m = 2..n`.
fn loewner_defect(a: &Matrix, q: &Matrix, a_norm: f64) -> Result<f64> {
    let aq = a * q;
    let a4 = a_norm.powi(4);
    let mut defect: f64 = 0.0;
    let (mut qm, mut aqm) = (q.clone(), aq.clone());
    for m in 2..=q.rows() {
        qm = &qm * q;
        aqm = &aqm * &aq;
        let p = 2.0 / m as f64;
        let gap = &psd_gram_power(&qm, p).scale_real(a4) - &psd_gram_power(&aqm, p);
        let (ev, _) = hermitian_eigen(&gap)?;
        defect = defect.max(-ev.first().copied().unwrap_or(0.0));
    }
    Ok(defect)
}

/// Entries on or above diagonal `k` (0 = main diagonal).
fn strict_upper(m: &Matrix, k: usize) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| if j >= i + k { m[(i, j)] } else { ZERO })
}

/// For commuting `N` (normal) and `Q` (nilpotent), `h(T)` and `h(N)` commute,
/// `h(T) - h(N)` is nilpotent, and `h(T) - h(N) = AQ` with
/// `A = (1/2 pi i) \oint h(l) (l - T)^{-1} (l - N)^{-1} dl`.
///
/// The factorization uses one quadrature for `h(T)`, `h(N)` and `A`; the
/// commutator and nilpotency use Schur-Parlett for `h(T)` and pointwise
/// evaluation for `h(N)`.
pub fn check_prop_commuting(n: &Matrix, q: &Matrix, h: &HoloFunction, cfg: &Config) -> Result<CheckResult> {
    let mut out = CheckResult::new("prop_commuting");
    let dim = n.ensure_square()?;
    ensure_commuting(n, q, 1e-10)?;
    let t = n.try_add(q)?;
    let ht = calc_triangular(&t, h)?;
    let hn = calc_normal(n, h)?;
    let scale = ht.norm_fro().max(1.0);
    let commutator = ht.commutator(&hn).norm_fro() / (ht.norm_fro() * hn.norm_fro()).max(1.0);
    out.residual("commutator", commutator, cfg.tol(1e-8));
    let diff = &ht - &hn;
    let (_, w) = is_nilpotent(&diff, 1e-8)?;
    record_witness(&mut out, "", &w, scale, cfg.tol(1e-8));

    let contour = contour_for(&[&t, n], h, cfg.nodes)?;
    let resolvent = |m: &Matrix, l: Complex64| {
        inverse(&Matrix::scalar(dim, l).try_sub(m)?).map_err(|_| Error::SingularResolvent { node: l })
    };
    let parts = contour_integral(&contour, |l| {
        let rt = resolvent(&t, l)?;
        let rn = resolvent(n, l)?;
        let hl = h.eval(l)?;
        let a = (&rt * &rn).scale(hl);
        Ok(vec![rt.scale(hl), rn.scale(hl), a])
    })?;
    let (ht_q, hn_q, a) = (&parts[0], &parts[1], &parts[2]);
    let aq = a * q;
    out.residual("factorization", (&(ht_q - hn_q) - &aq).norm_fro() / scale, cfg.tol(1e-8));
    let qa = q * a;
    out.residual(
        "a_commutes_with_q",
        (&aq - &qa).norm_fro() / (a.norm_fro() * q.norm_fro()).max(1.0),
        cfg.tol(1e-8),
    );
    out.metric("oracle", ht_q.rel_dist(&ht, 1.0));
    Ok(out.with_replay(&[("N", n), ("Q", q)]))
}

/// For a `T`-invariant projection `p`: the block formula for `T^{-1}`, the
/// spectrum of `T` as the union of the corner spectra, `p` invariant under
/// `h(T)`, and `h(T) p = h(pTp)`.
pub fn check_lemma_htinv(t: &Matrix, p: &Projection, h: &HoloFunction, cfg: &Config) -> Result<CheckResult> {
    let mut out = CheckResult::new("lemma_htinv");
    if p.is_trivial() {
        return Err(Error::TrivialProjection);
    }
    let (ok, residual) = is_invariant(t, p, INVARIANCE_TOL);
    if !ok {
        return Err(Error::NotInvariant { residual });
    }
    match (block_inverse(t, p), inverse(t)) {
        (Ok(bi), Ok(direct)) => {
            let cf = cond_factor(t);
            out.residual("block_inverse", bi.rel_dist(&direct, f64::MIN_POSITIVE), cfg.tol(1e-8) * cf);
            out.metric("cond_factor", cf);
        }
        (Err(e @ Error::SingularCorner { .. }), _) | (_, Err(e @ Error::SingularMatrix { .. })) => {
            out.note(&format!("block inverse not applicable: {e}"));
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    }

    let mut union = eigenvalues(&corner(t, p))?;
    union.extend(eigenvalues(&corner(t, &p.complement()))?);
    out.residual("spectra_union", match_multisets(&union, &eigenvalues(t)?), cfg.tol(1e-6));

    let ht = calc_triangular(t, h)?;
    let scale = ht.norm_fro().max(1.0);
    let (_, leak) = is_invariant(&ht, p, f64::INFINITY);
    out.residual("h_invariance", leak, cfg.tol(1e-8));
    let hc = calc_triangular(&corner(t, p), h)?;
    let lhs = &ht * p.matrix();
    out.residual("corner_calculus", (&lhs - &embed(&hc, p)).norm_fro() / scale, cfg.tol(1e-8));
    Ok(out.with_replay(&[("T", t), ("P", p.matrix())]))
}

/// For a `T`-invariant flag with block compression `E`: `E(T)` and `T` have
/// the same spectrum, `E(T^{-1}) = E(T)^{-1}` and `E(h(T)) = h(E(T))`.
pub fn check_lemma_einv_htexp(t: &Matrix, f: &Flag, h: &HoloFunction, cfg: &Config) -> Result<CheckResult> {
    let mut out = CheckResult::new("lemma_einv_htexp");
    ensure_flag_invariant(t, f)?;
    let e = exp_onto_blocks(t, f);
    out.residual("spectra", match_multisets(&eigenvalues(&e)?, &eigenvalues(t)?), cfg.tol(1e-6));
    match (inverse(t), inverse(&e)) {
        (Ok(ti), Ok(ei)) => {
            let lhs = exp_onto_blocks(&ti, f);
            out.residual("inverse", lhs.rel_dist(&ei, f64::MIN_POSITIVE), cfg.tol(1e-8));
            out.metric("cond_t", condition_number(t));
        }
        _ => out.note("T is singular; inverse identity not applicable"),
    }
    let lhs = exp_onto_blocks(&calc_triangular(t, h)?, f);
    let rhs = calc_triangular(&e, h)?;
    out.residual("h_commutes_with_expectation", lhs.rel_dist(&rhs, 1.0), cfg.tol(1e-8));
    Ok(out.with_replay(&[("T", t), ("flag_basis", f.basis())]))
}

/// `Delta(T - l) = Delta(E(T) - l)` for `trials` random `l` in the disk of
/// radius `2 ||T||_F`, and `nu_T = nu_{E(T)}`.
pub fn check_lemma_22(t: &Matrix, f: &Flag, trials: usize, seed: u64, cfg: &Config) -> Result<CheckResult> {
    let mut out = CheckResult::new("lemma_22");
    ensure_flag_invariant(t, f)?;
    let e = exp_onto_blocks(t, f);
    let mut r = rng(seed);
    let radius = 2.0 * t.norm_fro();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let l = point_in_disk(&mut r, radius);
        let a = fk_determinant(&t.shift(l))?;
        let b = fk_determinant(&e.shift(l))?;
        worst = worst.max((a - b).abs() / a.max(1e-14));
    }
    out.residual("fk_determinant", worst, cfg.tol(1e-7));
    out.residual(
        "brown_measure",
        brown_measure(t)?.distance(&brown_measure(&e)?),
        cfg.tol(1e-6),
    );
    Ok(out.with_replay(&[("T", t), ("flag_basis", f.basis())]))
}
