//! Expression trees for analytic functions of one complex variable `z`, with
//! a recursive-descent parser and a canonical printer.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' int)?
//! base   := number | 'z' | 'i' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'log' | 'sqrt'
//! ```
//!
//! Numbers are decimal literals with an optional exponent and an optional
//! `i` suffix marking them imaginary (`2.5i`). A bare `i` is the imaginary
//! unit.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Exp => z.exp(),
            Func::Log => z.ln(),
            Func::Sqrt => z.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Complex64),
    Z,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Func(Func, Box<Expr>),
}

impl Expr {
    pub fn depends_on_z(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Z => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.depends_on_z(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on_z() || b.depends_on_z()
            }
        }
    }

    pub fn has_func(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Z => false,
            Expr::Func(..) => true,
            Expr::Neg(a) | Expr::Pow(a, _) => a.has_func(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.has_func() || b.has_func()
            }
        }
    }

    /// True when the expression is a polynomial in `z` (no division, no
    /// transcendental functions of `z`).
    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Z => true,
            Expr::Func(..) => !self.depends_on_z(),
            Expr::Div(a, b) => a.is_polynomial() && !b.depends_on_z(),
            Expr::Neg(a) | Expr::Pow(a, _) => a.is_polynomial(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_polynomial() && b.is_polynomial(),
        }
    }

    /// Pointwise evaluation. Returns `None` on division by zero, `log 0` or a
    /// non-finite intermediate.
    pub fn eval(&self, z: Complex64) -> Option<Complex64> {
        let v = match self {
            Expr::Num(c) => *c,
            Expr::Z => z,
            Expr::Neg(a) => -a.eval(z)?,
            Expr::Add(a, b) => a.eval(z)? + b.eval(z)?,
            Expr::Sub(a, b) => a.eval(z)? - b.eval(z)?,
            Expr::Mul(a, b) => a.eval(z)? * b.eval(z)?,
            Expr::Div(a, b) => {
                let d = b.eval(z)?;
                if d == Complex64::new(0.0, 0.0) {
                    return None;
                }
                a.eval(z)? / d
            }
            Expr::Pow(a, k) => a.eval(z)?.powu(*k),
            Expr::Func(f, a) => {
                let x = a.eval(z)?;
                if *f == Func::Log && x == Complex64::new(0.0, 0.0) {
                    return None;
                }
                f.apply(x)
            }
        };
        (v.re.is_finite() && v.im.is_finite()).then_some(v)
    }
}

fn fmt_number(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 && c.re >= 0.0 && c.re.is_sign_positive() {
        write!(f, "{}", c.re)
    } else if c.re == 0.0 && c.re.is_sign_positive() && c.im > 0.0 {
        write!(f, "{}i", c.im)
    } else {
        // not produced by the parser; printed as an equivalent expression
        write!(f, "({} + {}i)", c.re, c.im)
    }
}

/// Canonical, fully parenthesized form. `parse(e.to_string()) == e` for every
/// tree produced by [`parse_expr`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => fmt_number(*c, f),
            Expr::Z => f.write_str("z"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => match **a {
                Expr::Num(_) | Expr::Z | Expr::Func(..) => write!(f, "{a}^{k}"),
                _ => write!(f, "({a})^{k}"),
            },
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.peek() == Some('/') {
                let offset = self.pos;
                self.pos += 1;
                let rhs = self.factor()?;
                check_denominator(&rhs, offset)?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.eat('^') {
            self.skip_ws();
            let start = self.pos;
            let digits = self.src[start..].bytes().take_while(u8::is_ascii_digit).count();
            if digits == 0 {
                return self.error(start, "expected a non-negative integer exponent after '^'");
            }
            self.pos += digits;
            let k: u32 = match self.src[start..self.pos].parse() {
                Ok(k) => k,
                Err(_) => return self.error(start, "exponent out of range"),
            };
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        let Some(c) = self.peek() else {
            return self.error(self.pos, "unexpected end of input");
        };
        let start = self.pos;
        if c == '(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(')') {
                return self.error(self.pos, "expected ')'");
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let len = self.src[start..]
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                .count();
            let ident = &self.src[start..start + len];
            self.pos += len;
            let func = match ident {
                "z" => return Ok(Expr::Z),
                "i" => return Ok(Expr::Num(Complex64::new(0.0, 1.0))),
                "exp" => Func::Exp,
                "log" => Func::Log,
                "sqrt" => Func::Sqrt,
                _ => return self.error(start, format!("unknown identifier `{ident}`")),
            };
            if !self.eat('(') {
                return self.error(self.pos, format!("expected '(' after `{ident}`"));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return self.error(self.pos, "expected ')'");
            }
            return Ok(Expr::Func(func, Box::new(arg)));
        }
        self.error(start, format!("unexpected character `{c}`"))
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end < bytes.len() && bytes[end] == b'.' {
            end += 1;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let value: f64 = match self.src[start..end].parse() {
            Ok(v) => v,
            Err(_) => return self.error(start, format!("malformed number `{}`", &self.src[start..end])),
        };
        if !value.is_finite() {
            return self.error(start, "number out of range");
        }
        self.pos = end;
        // imaginary suffix, only when not the start of a longer identifier
        if bytes.get(end) == Some(&b'i')
            && !bytes
                .get(end + 1)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
            return Ok(Expr::Num(Complex64::new(0.0, value)));
        }
        Ok(Expr::Num(Complex64::new(value, 0.0)))
    }
}

fn check_denominator(rhs: &Expr, offset: usize) -> Result<()> {
    if !rhs.depends_on_z() {
        match rhs.eval(Complex64::new(0.0, 0.0)) {
            Some(v) if v != Complex64::new(0.0, 0.0) => Ok(()),
            _ => Err(Error::DivisionByZeroConstant { offset }),
        }
    } else if rhs.has_func() {
        Err(Error::NonRationalDenominator { offset })
    } else {
        Ok(())
    }
}

/// Parses the function DSL into an expression tree.
pub fn parse_expr(source: &str) -> Result<Expr> {
    let mut p = Parser { src: source, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != source.len() {
        return p.error(p.pos, format!("unexpected trailing input `{}`", &source[p.pos..]));
    }
    Ok(e)
}
