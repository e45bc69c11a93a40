//! Truncated Taylor series arithmetic, used to evaluate `h^{(k)}(c) / k!` for
//! an expression tree without symbolic differentiation.

use num_complex::Complex64;

use super::expr::{Expr, Func};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients `a_0, ..., a_{K-1}` of a power series in `(z - c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<Complex64>);

impl Series {
    fn constant(c: Complex64, len: usize) -> Self {
        let mut v = vec![ZERO; len];
        v[0] = c;
        Series(v)
    }

    fn variable(center: Complex64, len: usize) -> Self {
        let mut v = vec![ZERO; len];
        v[0] = center;
        if len > 1 {
            v[1] = Complex64::new(1.0, 0.0);
        }
        Series(v)
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn add(&self, o: &Series) -> Series {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn sub(&self, o: &Series) -> Series {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    fn neg(&self) -> Series {
        Series(self.0.iter().map(|a| -a).collect())
    }

    fn mul(&self, o: &Series) -> Series {
        let n = self.len();
        let mut out = vec![ZERO; n];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0[..n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Series(out)
    }

    fn div(&self, o: &Series) -> Option<Series> {
        let b0 = o.0[0];
        if b0 == ZERO {
            return None;
        }
        let n = self.len();
        let mut c = vec![ZERO; n];
        for k in 0..n {
            let mut acc = self.0[k];
            for j in 1..=k {
                acc -= o.0[j] * c[k - j];
            }
            c[k] = acc / b0;
        }
        Some(Series(c))
    }

    fn powu(&self, mut k: u32) -> Series {
        let mut base = self.clone();
        let mut acc = Series::constant(Complex64::new(1.0, 0.0), self.len());
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn exp(&self) -> Series {
        let n = self.len();
        let mut e = vec![ZERO; n];
        e[0] = self.0[0].exp();
        for k in 1..n {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.0[j] * e[k - j] * j as f64;
            }
            e[k] = acc / k as f64;
        }
        Series(e)
    }

    fn log(&self) -> Option<Series> {
        let a0 = self.0[0];
        if a0 == ZERO {
            return None;
        }
        let n = self.len();
        let mut l = vec![ZERO; n];
        l[0] = a0.ln();
        for k in 1..n {
            let mut acc = ZERO;
            for j in 1..k {
                acc += l[j] * self.0[k - j] * j as f64;
            }
            l[k] = (self.0[k] - acc / k as f64) / a0;
        }
        Some(Series(l))
    }

    fn sqrt(&self) -> Option<Series> {
        let a0 = self.0[0];
        if a0 == ZERO {
            return None;
        }
        let n = self.len();
        let mut s = vec![ZERO; n];
        s[0] = a0.sqrt();
        for k in 1..n {
            let mut acc = ZERO;
            for j in 1..k {
                acc += s[j] * s[k - j];
            }
            s[k] = (self.0[k] - acc) / (s[0] * 2.0);
        }
        Some(Series(s))
    }
}

/// Taylor coefficients `h^{(k)}(center) / k!` for `k < len`.
pub fn taylor(expr: &Expr, center: Complex64, len: usize) -> Option<Vec<Complex64>> {
    fn go(e: &Expr, c: Complex64, n: usize) -> Option<Series> {
        Some(match e {
            Expr::Num(v) => Series::constant(*v, n),
            Expr::Z => Series::variable(c, n),
            Expr::Neg(a) => go(a, c, n)?.neg(),
            Expr::Add(a, b) => go(a, c, n)?.add(&go(b, c, n)?),
            Expr::Sub(a, b) => go(a, c, n)?.sub(&go(b, c, n)?),
            Expr::Mul(a, b) => go(a, c, n)?.mul(&go(b, c, n)?),
            Expr::Div(a, b) => go(a, c, n)?.div(&go(b, c, n)?)?,
            Expr::Pow(a, k) => go(a, c, n)?.powu(*k),
            Expr::Func(f, a) => {
                let s = go(a, c, n)?;
                match f {
                    Func::Exp => s.exp(),
                    Func::Log => s.log()?,
                    Func::Sqrt => s.sqrt()?,
                }
            }
        })
    }
    let s = go(expr, center, len.max(1))?;
    s.0.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(s.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::expr::parse_expr;

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn exp_series_at_zero() {
        let coeffs = taylor(&parse_expr("exp(z)").unwrap(), ZERO, 6).unwrap();
        let mut fact = 1.0;
        for (k, c) in coeffs.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((c.re - 1.0 / fact).abs() < 1e-15 && c.im == 0.0);
        }
    }

    #[test]
    fn polynomial_series_is_exact() {
        // z^3 - 2z + 1 about 1: 0 + (z-1) + 3 (z-1)^2 + (z-1)^3
        let coeffs = taylor(&parse_expr("z^3 - 2*z + 1").unwrap(), Complex64::new(1.0, 0.0), 6).unwrap();
        let want = [0.0, 1.0, 3.0, 1.0, 0.0, 0.0].map(|x| Complex64::new(x, 0.0));
        assert!(close(&coeffs, &want, 1e-14));
    }

    #[test]
    fn resolvent_series_matches_geometric() {
        // 1/(z-3) about 1 = -1/2 * sum ((z-1)/2)^k
        let coeffs = taylor(&parse_expr("1/(z-3)").unwrap(), Complex64::new(1.0, 0.0), 5).unwrap();
        for (k, c) in coeffs.iter().enumerate() {
            let want = -0.5 * 0.5f64.powi(k as i32);
            assert!((c.re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn log_and_sqrt_series_against_closed_forms() {
        let c = Complex64::new(2.0, 1.0);
        let l = taylor(&parse_expr("log(z)").unwrap(), c, 4).unwrap();
        // d^k/dz^k log z / k! = (-1)^{k+1} / (k c^k)
        for k in 1..4 {
            let want = Complex64::new(if k % 2 == 1 { 1.0 } else { -1.0 }, 0.0) / (c.powu(k as u32) * k as f64);
            assert!((l[k] - want).norm() < 1e-14);
        }
        let s = taylor(&parse_expr("sqrt(z)").unwrap(), c, 3).unwrap();
        assert!((s[1] - 0.5 / c.sqrt()).norm() < 1e-14);
        assert!((s[2] + 0.125 / (c * c.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn singular_center_fails() {
        assert!(taylor(&parse_expr("1/(z-3)").unwrap(), Complex64::new(3.0, 0.0), 3).is_none());
        assert!(taylor(&parse_expr("log(z)").unwrap(), ZERO, 3).is_none());
    }
}
