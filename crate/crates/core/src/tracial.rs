//! The normalized trace, Brown measures, Fuglede-Kadison determinants and
//! nilpotency diagnostics for matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holo::HoloFunction;
use crate::linalg::{eigenvalues, hermitian_eigen, jacobi_svd, largest_singular_value, match_multisets, Matrix, ONE, ZERO};

/// A point mass of weight `count / den`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: Complex64,
    pub count: usize,
}

/// Atomic probability measure with weights in `(1/n) Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownMeasure {
    atoms: Vec<Atom>,
    den: usize,
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    re: f64,
    im: f64,
    num: usize,
    den: usize,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<AtomJson>,
}

impl BrownMeasure {
    /// Uniform measure on `points`, merging locations within
    /// `1e-9 * max(1, scale)`.
    pub fn from_points(points: &[Complex64], scale: f64) -> Self {
        let tol = 1e-9 * scale.max(1.0);
        let mut atoms: Vec<(Complex64, usize)> = Vec::new();
        for &p in points {
            match atoms.iter_mut().find(|(loc, _)| (*loc - p).norm() <= tol) {
                Some((loc, count)) => {
                    *loc = (*loc * *count as f64 + p) / (*count + 1) as f64;
                    *count += 1;
                }
                None => atoms.push((p, 1)),
            }
        }
        Self::from_counts(atoms, points.len())
    }

    fn from_counts(mut atoms: Vec<(Complex64, usize)>, den: usize) -> Self {
        atoms.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        Self {
            atoms: atoms
                .into_iter()
                .map(|(location, count)| Atom { location, count })
                .collect(),
            den,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn denominator(&self) -> usize {
        self.den
    }

    /// Weight of each atom as a float.
    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.count as f64 / self.den as f64).collect()
    }

    /// Sum of the integer numerators; equals the denominator for a
    /// probability measure.
    pub fn total_count(&self) -> usize {
        self.atoms.iter().map(|a| a.count).sum()
    }

    /// Locations repeated by multiplicity.
    pub fn multiset(&self) -> Vec<Complex64> {
        self.atoms
            .iter()
            .flat_map(|a| std::iter::repeat_n(a.location, a.count))
            .collect()
    }

    /// Largest matched distance between the two measures' atom multisets;
    /// infinite if the denominators differ.
    pub fn distance(&self, other: &BrownMeasure) -> f64 {
        if self.den != other.den {
            return f64::INFINITY;
        }
        match_multisets(&self.multiset(), &other.multiset())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }

    fn to_doc(&self) -> MeasureJson {
        MeasureJson {
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    re: a.location.re,
                    im: a.location.im,
                    num: a.count,
                    den: self.den,
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MeasureJson = serde_json::from_str(text)?;
        let den = doc.atoms.first().map_or(1, |a| a.den);
        if doc.atoms.iter().any(|a| a.den != den || a.num == 0) {
            return Err(Error::InvalidInput("atoms must share one denominator and have positive weight".into()));
        }
        let total: usize = doc.atoms.iter().map(|a| a.num).sum();
        if total != den {
            return Err(Error::InvalidInput(format!("weights sum to {total}/{den}, not 1")));
        }
        Ok(Self::from_counts(
            doc.atoms.iter().map(|a| (Complex64::new(a.re, a.im), a.num)).collect(),
            den,
        ))
    }
}

impl Serialize for BrownMeasure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(serializer)
    }
}

/// `nu_T`: uniform on the eigenvalues of `T` with multiplicity.
pub fn brown_measure(t: &Matrix) -> Result<BrownMeasure> {
    t.ensure_square()?;
    Ok(BrownMeasure::from_points(&eigenvalues(t)?, t.norm_fro()))
}

/// Image of `mu` under `h`, merging atoms that land together.
pub fn pushforward(mu: &BrownMeasure, h: &HoloFunction) -> Result<BrownMeasure> {
    let mut images = Vec::with_capacity(mu.atoms.len());
    for a in &mu.atoms {
        h.check_defined(a.location, 1e-9 * a.location.norm().max(1.0))?;
        let v = h.eval(a.location)?;
        images.push((v, a.count));
    }
    let scale = images.iter().map(|(v, _)| v.norm()).fold(1.0, f64::max);
    let points: Vec<Complex64> = images
        .iter()
        .flat_map(|&(v, c)| std::iter::repeat_n(v, c))
        .collect();
    let merged = BrownMeasure::from_points(&points, scale);
    Ok(BrownMeasure { den: mu.den, ..merged })
}

/// `Delta(T) = (prod sigma_i)^{1/n}`, or 0 when `T` is numerically singular.
pub fn fk_determinant(t: &Matrix) -> Result<f64> {
    let n = t.ensure_square()?;
    if n == 0 {
        return Ok(1.0);
    }
    let sigma = jacobi_svd(t).sigma;
    let top = sigma[0];
    if top == 0.0 || sigma.iter().any(|&s| s <= 1e-14 * top) {
        return Ok(0.0);
    }
    let mean_log = sigma.iter().map(|s| s.ln()).sum::<f64>() / n as f64;
    Ok(mean_log.exp())
}

/// `exp(tau(log |T|))` from the eigenvalues of `T* T`, an independent route
/// to [`fk_determinant`] for invertible `T`.
pub fn fk_determinant_spectral(t: &Matrix) -> Result<f64> {
    let n = t.ensure_square()?;
    if n == 0 {
        return Ok(1.0);
    }
    let (mu, _) = hermitian_eigen(&(&t.adjoint() * t))?;
    if mu.iter().any(|&m| m <= 0.0) {
        return Ok(0.0);
    }
    Ok((mu.iter().map(|m| m.ln()).sum::<f64>() / (2.0 * n as f64)).exp())
}

/// `||Q^m||_2^{1/m}` for `m = 1..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasinilpotencyProfile {
    pub norms: Vec<f64>,
}

pub fn quasinilpotency_profile(q: &Matrix, m_max: usize) -> Result<QuasinilpotencyProfile> {
    let n = q.ensure_square()?;
    let mut norms = Vec::with_capacity(m_max);
    let mut power = Matrix::identity(n);
    for m in 1..=m_max {
        power = &power * q;
        norms.push(largest_singular_value(&power).powf(1.0 / m as f64));
    }
    Ok(QuasinilpotencyProfile { norms })
}

/// Evidence for or against nilpotency of `q`.
///
/// With `V` a unitary that (approximately) triangularizes `q`, the witness
/// records the largest diagonal modulus of `V* q V` (its eigenvalues once the
/// strictly lower part vanishes), the norm of that strictly lower part, and
/// `||q^n||_2^{1/n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NilpotencyWitness {
    pub spectral_radius: f64,
    pub lower_residual: f64,
    pub power_root: f64,
    pub scale: f64,
}

impl NilpotencyWitness {
    /// True when both the diagonal and the strictly lower part of the
    /// triangularized form are below `bound`.
    pub fn within(&self, bound: f64) -> bool {
        self.spectral_radius <= bound && self.lower_residual <= bound
    }

    /// The default test: `bound = tol * max(1, ||q||_F)`.
    pub fn is_nilpotent(&self, tol: f64) -> bool {
        self.within(tol * self.scale.max(1.0))
    }
}

/// Unitary whose leading columns successively span the near-null directions
/// of `q` restricted to the orthogonal complement of the earlier columns.
///
/// For nilpotent `q` this is a Schur basis in which `q` is strictly upper
/// triangular. Unlike computed eigenvalues, which for a nilpotent matrix are
/// perturbed by `eps^{1/n}`, each step only loses rounding error.
pub fn null_staircase(q: &Matrix) -> Result<Matrix> {
    let n = q.ensure_square()?;
    let mut found: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    // complement basis, as columns
    let mut comp = Matrix::identity(n);
    for k in 0..n {
        let b = q.compress(&comp);
        let svd = jacobi_svd(&b);
        let y = svd.v.column(n - k - 1);
        let v: Vec<Complex64> = (0..n)
            .map(|i| (0..n - k).map(|j| comp[(i, j)] * y[j]).sum())
            .collect();
        found.push(v);
        if k + 1 < n {
            comp = &comp * &complement_of(&y);
        }
    }
    Ok(Matrix::from_fn(n, n, |i, j| found[j][i]))
}

/// `m x (m-1)` orthonormal basis of the complement of the unit vector `y`,
/// from the Householder reflector that maps `y` to a multiple of `e_1`.
fn complement_of(y: &[Complex64]) -> Matrix {
    let m = y.len();
    let phase = if y[0] == ZERO { ONE } else { y[0] / y[0].norm() };
    let mut w: Vec<Complex64> = y.to_vec();
    w[0] += phase;
    let wn: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    Matrix::from_fn(m, m - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { ONE } else { ZERO };
        delta - w[i] * w[col].conj() * (2.0 / wn)
    })
}

/// Witness computed in a known basis (for example a flag basis).
pub fn nilpotency_witness_in(q: &Matrix, basis: &Matrix) -> Result<NilpotencyWitness> {
    let n = q.ensure_square()?;
    let form = q.compress(basis);
    let spectral_radius = form.diag().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let power_root = if n == 0 {
        0.0
    } else {
        largest_singular_value(&q.powi(n as u32)).powf(1.0 / n as f64)
    };
    Ok(NilpotencyWitness {
        spectral_radius,
        lower_residual: form.strict_lower_norm(),
        power_root,
        scale: q.norm_fro(),
    })
}

/// Witness in the coordinate basis when `q` is already strictly upper
/// triangular there, otherwise the better of that and the
/// [`null_staircase`] basis.
pub fn nilpotency_witness(q: &Matrix) -> Result<NilpotencyWitness> {
    let n = q.ensure_square()?;
    let direct = nilpotency_witness_in(q, &Matrix::identity(n))?;
    if direct.spectral_radius == 0.0 && direct.lower_residual == 0.0 {
        return Ok(direct);
    }
    let stair = nilpotency_witness_in(q, &null_staircase(q)?)?;
    let worst = |w: &NilpotencyWitness| w.spectral_radius.max(w.lower_residual);
    Ok(if worst(&stair) < worst(&direct) { stair } else { direct })
}

/// `(is nilpotent at tol, witness)`.
pub fn is_nilpotent(q: &Matrix, tol: f64) -> Result<(bool, NilpotencyWitness)> {
    let w = nilpotency_witness(q)?;
    Ok((w.is_nilpotent(tol), w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_unitary, rng, strictly_upper};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn brown_measure_examples() {
        let nil = brown_measure(&Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(nil.atoms().len(), 1);
        assert_eq!(nil.atoms()[0].count, 2);
        assert_eq!(nil.atoms()[0].location, ZERO);

        let d = brown_measure(&Matrix::from_real_diag(&[1.0, 2.0])).unwrap();
        let t = brown_measure(&Matrix::from_real(&[&[1.0, 1.0], &[0.0, 2.0]])).unwrap();
        for mu in [&d, &t] {
            assert_eq!(mu.weights(), vec![0.5, 0.5]);
            assert!(mu.distance(&BrownMeasure::from_points(&[c(1.0, 0.0), c(2.0, 0.0)], 1.0)) < 1e-12);
        }
    }

    #[test]
    fn pushforward_examples() {
        let mu = BrownMeasure::from_points(&[c(1.0, 0.0), c(2.0, 0.0)], 1.0);
        let sq = pushforward(&mu, &HoloFunction::parse("z^2").unwrap()).unwrap();
        assert!(sq.distance(&BrownMeasure::from_points(&[c(1.0, 0.0), c(4.0, 0.0)], 1.0)) < 1e-15);
        let id = pushforward(&mu, &HoloFunction::parse("z").unwrap()).unwrap();
        assert_eq!(id, mu);

        let sym = BrownMeasure::from_points(&[c(-1.0, 0.0), c(1.0, 0.0)], 1.0);
        let merged = pushforward(&sym, &HoloFunction::parse("z^2").unwrap()).unwrap();
        assert_eq!(merged.atoms().len(), 1);
        assert_eq!(merged.atoms()[0].count, 2);
        assert_eq!(merged.denominator(), 2);
    }

    #[test]
    fn pushforward_rejects_pole() {
        let mu = BrownMeasure::from_points(&[c(3.0, 0.0)], 1.0);
        let h = HoloFunction::parse("1/(z-3)").unwrap();
        assert!(matches!(pushforward(&mu, &h), Err(Error::SingularityHit { .. })));
    }

    #[test]
    fn json_shape() {
        let mu = BrownMeasure::from_points(&[c(1.0, 0.0), c(2.0, 0.5)], 1.0);
        assert_eq!(
            mu.to_json(),
            r#"{"atoms":[{"re":1.0,"im":0.0,"num":1,"den":2},{"re":2.0,"im":0.5,"num":1,"den":2}]}"#
        );
        assert_eq!(BrownMeasure::from_json(&mu.to_json()).unwrap(), mu);
        assert!(BrownMeasure::from_json(r#"{"atoms":[{"re":1.0,"im":0.0,"num":1,"den":2}]}"#).is_err());
    }

    #[test]
    fn fk_determinant_examples() {
        let d = fk_determinant(&Matrix::from_real_diag(&[1.0, 2.0])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let u = random_unitary(&mut rng(5), 6);
        assert!((fk_determinant(&u).unwrap() - 1.0).abs() < 1e-13);
        assert_eq!(fk_determinant(&Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap(), 0.0);
    }

    #[test]
    fn fk_two_routes_agree() {
        let t = Matrix::from_real(&[&[1.0, 1.0], &[0.0, 2.0]]);
        let a = fk_determinant(&t).unwrap();
        let b = fk_determinant_spectral(&t).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn profile_examples() {
        let q = Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(quasinilpotency_profile(&q, 2).unwrap().norms, vec![1.0, 0.0]);
        assert_eq!(quasinilpotency_profile(&Matrix::zeros(3, 3), 3).unwrap().norms, vec![0.0; 3]);
        let q = Matrix::from_real(&[&[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0], &[0.0, 0.0, 0.0]]);
        let p = quasinilpotency_profile(&q, 3).unwrap().norms;
        assert!((p[0] - 3.0).abs() < 1e-14);
        assert!((p[1] - 6f64.sqrt()).abs() < 1e-14);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn nilpotency_examples() {
        let q = strictly_upper(&mut rng(1), 6, 1.0);
        assert!(is_nilpotent(&q, 1e-8).unwrap().0);
        assert!(!is_nilpotent(&Matrix::identity(4), 1e-8).unwrap().0);
        let u = random_unitary(&mut rng(2), 6);
        let (ok, w) = is_nilpotent(&q.expand(&u), 1e-8).unwrap();
        assert!(ok, "{w:?}");
        assert!(w.power_root < 1e-2);
    }

    #[test]
    fn staircase_triangularizes_nilpotent() {
        let mut r = rng(9);
        let q = strictly_upper(&mut r, 12, 1.0).expand(&random_unitary(&mut r, 12));
        let v = null_staircase(&q).unwrap();
        assert!((&(&v.adjoint() * &v) - &Matrix::identity(12)).norm_fro() < 1e-12);
        let form = q.compress(&v);
        // random triangular matrices are badly conditioned, which limits how
        // well each null direction is resolved
        assert!(form.lower_norm() < 1e-8 * q.norm_fro(), "{}", form.lower_norm());
    }

    #[test]
    fn non_nilpotent_small_perturbation_is_detected() {
        let mut q = Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        q[(1, 0)] = c(1e-4, 0.0);
        // eigenvalues +-1e-2
        let (ok, w) = is_nilpotent(&q, 1e-8).unwrap();
        assert!(!ok);
        assert!(w.spectral_radius.max(w.lower_residual) > 1e-6);
    }
}
