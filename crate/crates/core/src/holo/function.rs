//! Parsed analytic functions together with their singular set.

use std::fmt;

use num_complex::Complex64;

use super::expr::{parse_expr, Expr, Func};
use super::series::taylor;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, Matrix, ZERO};

/// Polynomial with coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<Complex64>);

impl Poly {
    fn constant(c: Complex64) -> Self {
        Poly(vec![c])
    }

    fn z() -> Self {
        Poly(vec![ZERO, Complex64::new(1.0, 0.0)])
    }

    fn trim(mut self) -> Self {
        while self.0.len() > 1 && *self.0.last().unwrap() == ZERO {
            self.0.pop();
        }
        self
    }

    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly((0..n)
            .map(|k| self.0.get(k).copied().unwrap_or(ZERO) + o.0.get(k).copied().unwrap_or(ZERO))
            .collect())
        .trim()
    }

    fn scale(&self, c: Complex64) -> Poly {
        Poly(self.0.iter().map(|a| a * c).collect()).trim()
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![ZERO; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out).trim()
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::constant(ZERO);
        }
        Poly(self.0[1..].iter().enumerate().map(|(k, c)| c * (k + 1) as f64).collect())
    }

    /// Roots via eigenvalues of the companion matrix, polished by Newton steps.
    fn roots(&self) -> Result<Vec<Complex64>> {
        let d = self.degree();
        if d == 0 {
            return Ok(Vec::new());
        }
        let lead = self.0[d];
        let companion = Matrix::from_fn(d, d, |i, j| {
            if j == d - 1 {
                -self.0[i] / lead
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        });
        let dp = self.derivative();
        let mut roots = eigenvalues(&companion)?;
        for r in roots.iter_mut() {
            for _ in 0..3 {
                let slope = dp.eval(*r);
                if slope == ZERO {
                    break;
                }
                let step = self.eval(*r) / slope;
                if !(step.re.is_finite() && step.im.is_finite()) {
                    break;
                }
                *r -= step;
            }
        }
        Ok(roots)
    }
}

/// `num / den`.
#[derive(Debug, Clone)]
struct Rational {
    num: Poly,
    den: Poly,
}

impl Rational {
    fn from_expr(e: &Expr) -> Option<Rational> {
        let one = Poly::constant(Complex64::new(1.0, 0.0));
        Some(match e {
            Expr::Num(c) => Rational {
                num: Poly::constant(*c),
                den: one,
            },
            Expr::Z => Rational { num: Poly::z(), den: one },
            Expr::Neg(a) => {
                let r = Self::from_expr(a)?;
                Rational {
                    num: r.num.scale(Complex64::new(-1.0, 0.0)),
                    den: r.den,
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (ra, rb) = (Self::from_expr(a)?, Self::from_expr(b)?);
                let sign = if matches!(e, Expr::Sub(..)) { -1.0 } else { 1.0 };
                Rational {
                    num: ra.num.mul(&rb.den).add(&rb.num.mul(&ra.den).scale(Complex64::new(sign, 0.0))),
                    den: ra.den.mul(&rb.den),
                }
            }
            Expr::Mul(a, b) => {
                let (ra, rb) = (Self::from_expr(a)?, Self::from_expr(b)?);
                Rational {
                    num: ra.num.mul(&rb.num),
                    den: ra.den.mul(&rb.den),
                }
            }
            Expr::Div(a, b) => {
                let (ra, rb) = (Self::from_expr(a)?, Self::from_expr(b)?);
                Rational {
                    num: ra.num.mul(&rb.den),
                    den: ra.den.mul(&rb.num),
                }
            }
            Expr::Pow(a, k) => {
                let r = Self::from_expr(a)?;
                let mut num = one.clone();
                let mut den = one;
                for _ in 0..*k {
                    num = num.mul(&r.num);
                    den = den.mul(&r.den);
                }
                Rational { num, den }
            }
            Expr::Func(..) => {
                if e.depends_on_z() {
                    return None;
                }
                Rational {
                    num: Poly::constant(e.eval(ZERO)?),
                    den: one,
                }
            }
        })
    }
}

/// Where the principal branch of `log` / `sqrt` is discontinuous.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchCut {
    /// `{ point + t * direction : t >= 0 }`, `|direction| = 1`.
    Ray { point: Complex64, direction: Complex64 },
    /// Preimage of `(-inf, 0]` under a non-affine argument.
    Preimage { argument: Expr },
}

impl BranchCut {
    /// Distance from `z` to the cut, when it can be computed exactly.
    pub fn distance(&self, z: Complex64) -> Option<f64> {
        match self {
            BranchCut::Ray { point, direction } => {
                let w = z - point;
                let t = (w * direction.conj()).re.max(0.0);
                Some((w - direction * t).norm())
            }
            BranchCut::Preimage { .. } => None,
        }
    }

    /// True when the principal branch is discontinuous at `z` (to `tol`).
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        match self {
            BranchCut::Ray { .. } => self.distance(z).is_some_and(|d| d <= tol),
            BranchCut::Preimage { argument } => match argument.eval(z) {
                Some(w) => w.re <= 0.0 && w.im.abs() <= tol * w.norm().max(1.0),
                None => true,
            },
        }
    }
}

/// A parsed analytic function with its poles, branch points and branch cuts.
#[derive(Debug, Clone)]
pub struct HoloFunction {
    source: String,
    expr: Expr,
    singularities: Vec<Complex64>,
    branch_cuts: Vec<BranchCut>,
}

impl HoloFunction {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = parse_expr(source)?;
        let mut singularities = Vec::new();
        let mut branch_cuts = Vec::new();
        collect_singular_set(&expr, &mut singularities, &mut branch_cuts)?;
        let mut unique: Vec<Complex64> = Vec::new();
        for s in singularities {
            if !unique.iter().any(|u| (u - s).norm() <= 1e-12 * s.norm().max(1.0)) {
                unique.push(s);
            }
        }
        Ok(Self {
            source: source.to_string(),
            expr,
            singularities: unique,
            branch_cuts,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Poles and branch points.
    pub fn singularities(&self) -> &[Complex64] {
        &self.singularities
    }

    pub fn branch_cuts(&self) -> &[BranchCut] {
        &self.branch_cuts
    }

    pub fn is_polynomial(&self) -> bool {
        self.expr.is_polynomial()
    }

    /// Checks that `z` is at least `tol` away from every singularity and not
    /// on a branch cut.
    pub fn check_defined(&self, z: Complex64, tol: f64) -> Result<()> {
        let hit = self.singularities.iter().any(|s| (s - z).norm() <= tol)
            || self.branch_cuts.iter().any(|c| c.contains(z, tol));
        if hit {
            Err(Error::SingularityHit { point: z })
        } else {
            Ok(())
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.expr.eval(z).ok_or(Error::SingularityHit { point: z })
    }

    /// `h^{(k)}(z) / k!` for `k < len`.
    pub fn taylor(&self, z: Complex64, len: usize) -> Result<Vec<Complex64>> {
        taylor(&self.expr, z, len).ok_or(Error::SingularityHit { point: z })
    }

    /// Degree of the numerator when `h` is a polynomial.
    pub fn polynomial_degree(&self) -> Option<usize> {
        if !self.is_polynomial() {
            return None;
        }
        Rational::from_expr(&self.expr).map(|r| r.num.degree())
    }

    /// Canonical printed form of the expression tree.
    pub fn pretty(&self) -> String {
        self.expr.to_string()
    }
}

impl fmt::Display for HoloFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn collect_singular_set(e: &Expr, points: &mut Vec<Complex64>, cuts: &mut Vec<BranchCut>) -> Result<()> {
    match e {
        Expr::Num(_) | Expr::Z => Ok(()),
        Expr::Neg(a) | Expr::Pow(a, _) => collect_singular_set(a, points, cuts),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            collect_singular_set(a, points, cuts)?;
            collect_singular_set(b, points, cuts)
        }
        Expr::Div(a, b) => {
            collect_singular_set(a, points, cuts)?;
            collect_singular_set(b, points, cuts)?;
            if b.depends_on_z() {
                // the parser only admits rational denominators
                let r = Rational::from_expr(b).ok_or(Error::NonRationalDenominator { offset: 0 })?;
                points.extend(r.num.roots()?);
            }
            Ok(())
        }
        Expr::Func(f, a) => {
            collect_singular_set(a, points, cuts)?;
            if *f == Func::Exp || !a.depends_on_z() {
                return Ok(());
            }
            match Rational::from_expr(a) {
                Some(r) => {
                    points.extend(r.num.roots()?);
                    if r.den.degree() == 0 && r.num.degree() == 1 {
                        // a z + b hits (-inf, 0] along z0 - t / a
                        let slope = r.num.0[1] / r.den.0[0];
                        let point = -(r.num.0[0] / r.den.0[0]) / slope;
                        let direction = -slope.conj() / slope.norm();
                        cuts.push(BranchCut::Ray { point, direction });
                    } else {
                        cuts.push(BranchCut::Preimage { argument: (**a).clone() });
                    }
                }
                None => cuts.push(BranchCut::Preimage { argument: (**a).clone() }),
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::match_multisets;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polynomial_has_no_singularities() {
        let h = HoloFunction::parse("z^2 + 1").unwrap();
        assert!(h.singularities().is_empty());
        assert!(h.branch_cuts().is_empty());
    }

    #[test]
    fn simple_pole() {
        let h = HoloFunction::parse("1/(z-3)").unwrap();
        assert_eq!(h.singularities().len(), 1);
        assert!((h.singularities()[0] - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn poles_of_rational_denominator() {
        let h = HoloFunction::parse("exp(z)/(z^2+1)").unwrap();
        assert!(match_multisets(h.singularities(), &[c(0.0, 1.0), c(0.0, -1.0)]) < 1e-8);
    }

    #[test]
    fn log_of_affine_argument_has_ray_cut() {
        let h = HoloFunction::parse("log(2*z - 4)").unwrap();
        assert!((h.singularities()[0] - c(2.0, 0.0)).norm() < 1e-12);
        match &h.branch_cuts()[0] {
            BranchCut::Ray { point, direction } => {
                assert!((point - c(2.0, 0.0)).norm() < 1e-12);
                assert!((direction - c(-1.0, 0.0)).norm() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(h.check_defined(c(1.0, 0.0), 1e-9).is_err());
        assert!(h.check_defined(c(3.0, 0.0), 1e-9).is_ok());
        assert!(h.check_defined(c(1.0, 0.5), 1e-9).is_ok());
    }

    #[test]
    fn sqrt_of_quadratic_has_preimage_cut() {
        let h = HoloFunction::parse("sqrt(z^2 + 1)").unwrap();
        assert!(match_multisets(h.singularities(), &[c(0.0, 1.0), c(0.0, -1.0)]) < 1e-8);
        assert!(matches!(h.branch_cuts()[0], BranchCut::Preimage { .. }));
        // z = 2i gives z^2 + 1 = -3, on the cut
        assert!(h.check_defined(c(0.0, 2.0), 1e-9).is_err());
        assert!(h.check_defined(c(1.0, 0.0), 1e-9).is_ok());
    }

    #[test]
    fn repeated_roots_are_merged() {
        let h = HoloFunction::parse("1/(z-1)^2").unwrap();
        // companion eigenvalues of a double root are accurate to ~sqrt(eps)
        assert!(!h.singularities().is_empty());
        assert!(h.singularities().iter().all(|s| (s - c(1.0, 0.0)).norm() < 1e-7));
    }

    #[test]
    fn eval_at_pole_is_singularity_hit() {
        let h = HoloFunction::parse("1/(z-3)").unwrap();
        assert!(matches!(h.eval(c(3.0, 0.0)), Err(Error::SingularityHit { .. })));
        assert_eq!(h.eval(c(1.0, 0.0)).unwrap(), c(-0.5, 0.0));
    }
}
