//! Polynomial expressions in `t` and `x` with rational coefficients, as written in
//! configs: `t/2`, `1 - t^2/10`, `x/10 + t/100`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use ramify::scalar::{c_re, C};
use ramify::{Real, TruncatedSeries2};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("not a polynomial at column {pos}: {msg}")]
    NotPolynomial { pos: usize, msg: String },
}

fn syntax<T>(pos: usize, msg: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError::Syntax { pos, msg: msg.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    T,
    X,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(BigRational),
    Var(Sym),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Divisor must lower to a nonzero constant; `pos` locates the operator.
    Div { num: Box<Expr>, den: Box<Expr>, pos: usize },
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i + 1;
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let mut digits = String::new();
                let mut scale = 0u32;
                let mut seen_dot = false;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    if chars[i] == '.' {
                        if seen_dot {
                            return syntax(i + 1, "second decimal point");
                        }
                        seen_dot = true;
                    } else {
                        digits.push(chars[i]);
                        if seen_dot {
                            scale += 1;
                        }
                    }
                    i += 1;
                }
                if digits.is_empty() {
                    return syntax(start, "expected digits");
                }
                let n: BigInt = digits.parse().expect("ascii digits");
                let d = num_traits::pow(BigInt::from(10), scale as usize);
                out.push((start, Tok::Num(BigRational::new(n, d))));
            }
            c if c.is_alphabetic() => {
                let mut name = String::new();
                while i < chars.len() && chars[i].is_alphanumeric() {
                    name.push(chars[i]);
                    i += 1;
                }
                out.push((start, Tok::Ident(name)));
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                out.push((start, Tok::Op(c)));
                i += 1;
            }
            '\u{2212}' => {
                out.push((start, Tok::Op('-')));
                i += 1;
            }
            '\u{d7}' => {
                out.push((start, Tok::Op('*')));
                i += 1;
            }
            '\u{f7}' => {
                out.push((start, Tok::Op('/')));
                i += 1;
            }
            other => return syntax(start, format!("unexpected character {other:?}")),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
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

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let pos = self.pos();
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div { num: Box::new(lhs), den: Box::new(self.unary()?), pos };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        let negative = self.eat('-');
        match self.toks.get(self.at).cloned() {
            Some((_, Tok::Num(n))) => {
                self.at += 1;
                let not_poly = |msg: &str| Err(ExprError::NotPolynomial { pos, msg: msg.into() });
                if negative {
                    return not_poly("negative exponent");
                }
                if !n.is_integer() {
                    return not_poly("fractional exponent");
                }
                match n.to_integer().to_u32() {
                    Some(e) => Ok(Expr::Pow(Box::new(base), e)),
                    None => not_poly("exponent too large"),
                }
            }
            _ => syntax(pos, "expected an integer exponent"),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.toks.get(self.at).cloned() {
            Some((_, Tok::Num(n))) => {
                self.at += 1;
                Ok(Expr::Num(n))
            }
            Some((_, Tok::Ident(name))) => {
                self.at += 1;
                match name.as_str() {
                    "t" => Ok(Expr::Var(Sym::T)),
                    "x" => Ok(Expr::Var(Sym::X)),
                    _ => Err(ExprError::NotPolynomial { pos, msg: format!("unknown symbol {name:?}") }),
                }
            }
            Some((_, Tok::Op('('))) => {
                self.at += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return syntax(self.pos(), "expected ')'");
                }
                Ok(inner)
            }
            Some((_, Tok::Op(c))) => syntax(pos, format!("unexpected {c:?}")),
            None => syntax(pos, "unexpected end of input"),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0, end: src.chars().count() + 1 };
    let e = p.expr()?;
    if p.at < p.toks.len() {
        return syntax(p.pos(), "trailing input");
    }
    Ok(e)
}

/// Exact polynomial in `t` and `x`, keyed by `(t power, x power)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), BigRational>,
}

impl Poly2 {
    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::default();
        p.add_term((0, 0), c);
        p
    }

    fn add_term(&mut self, k: (u32, u32), c: BigRational) {
        let e = self.terms.entry(k).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &BigRational)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    fn combine(&self, other: &Self, sign: i32) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, if sign < 0 { -c.clone() } else { c.clone() });
        }
        out
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for ((a, b), c) in &self.terms {
            for ((d, e), f) in &other.terms {
                out.add_term((a + d, b + e), c * f);
            }
        }
        out
    }

    fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::default();
        for (k, v) in &self.terms {
            out.add_term(*k, v * c);
        }
        out
    }

    /// Series at the given truncation order; terms at or beyond it are dropped.
    pub fn to_series<T: Real>(&self, order: usize) -> TruncatedSeries2<T> {
        TruncatedSeries2::from_terms(
            order,
            self.terms.iter().map(|(&(l, m), c)| (l as usize, m as usize, rational_to_complex::<T>(c))),
        )
    }
}

/// Nearest scalar to an exact rational; small fractions go through an exact division.
pub fn rational_to_real<T: Real>(r: &BigRational) -> T {
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) => T::ratio(n, d),
        _ => T::from_f64_lossy(r.to_f64().unwrap_or(f64::NAN)),
    }
}

pub fn rational_to_complex<T: Real>(r: &BigRational) -> C<T> {
    c_re(rational_to_real(r))
}

impl Expr {
    pub fn lower(&self) -> Result<Poly2, ExprError> {
        Ok(match self {
            Expr::Num(n) => Poly2::constant(n.clone()),
            Expr::Var(s) => {
                let mut p = Poly2::default();
                p.add_term(if *s == Sym::T { (1, 0) } else { (0, 1) }, BigRational::one());
                p
            }
            Expr::Neg(e) => e.lower()?.scale(&-BigRational::one()),
            Expr::Add(a, b) => a.lower()?.combine(&b.lower()?, 1),
            Expr::Sub(a, b) => a.lower()?.combine(&b.lower()?, -1),
            Expr::Mul(a, b) => a.lower()?.mul(&b.lower()?),
            Expr::Div { num, den, pos } => {
                let d = den.lower()?;
                let Some(c) = d.as_constant() else {
                    return Err(ExprError::NotPolynomial { pos: *pos, msg: "division by a non-constant".into() });
                };
                if c.is_zero() {
                    return Err(ExprError::NotPolynomial { pos: *pos, msg: "division by zero".into() });
                }
                num.lower()?.scale(&c.recip())
            }
            Expr::Pow(b, e) => {
                let base = b.lower()?;
                (0..*e).fold(Poly2::constant(BigRational::one()), |acc, _| acc.mul(&base))
            }
        })
    }
}

/// Parses and lowers in one step.
pub fn parse_poly(src: &str) -> Result<Poly2, ExprError> {
    parse(src)?.lower()
}

/// Parses an expression that must be a constant.
pub fn parse_constant(src: &str) -> Result<BigRational, ExprError> {
    parse_poly(src)?
        .as_constant()
        .ok_or_else(|| ExprError::NotPolynomial { pos: 1, msg: format!("{src:?} is not a constant") })
}

impl fmt::Display for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut keys: Vec<_> = self.terms.keys().copied().collect();
        keys.sort_by_key(|&(l, m)| (l + m, std::cmp::Reverse(l)));
        for (i, k) in keys.into_iter().enumerate() {
            let c = &self.terms[&k];
            match (i, c.is_negative()) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.abs();
            let mut factors = Vec::new();
            if !a.is_one() || k == (0, 0) {
                factors.push(a.to_string());
            }
            for (name, e) in [("t", k.0), ("x", k.1)] {
                match e {
                    0 => {}
                    1 => factors.push(name.to_string()),
                    _ => factors.push(format!("{name}^{e}")),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn coeff(p: &Poly2, k: (u32, u32)) -> BigRational {
        p.terms().find(|(kk, _)| *kk == k).map(|(_, c)| c.clone()).unwrap_or_default()
    }

    #[test]
    fn half_t() {
        let p = parse_poly("t/2").unwrap();
        assert_eq!(p.terms().count(), 1);
        assert_eq!(coeff(&p, (1, 0)), q(1, 2));
    }

    #[test]
    fn fractional_and_unicode_inputs() {
        let p = parse_poly("1 - t^2/10").unwrap();
        assert_eq!(coeff(&p, (0, 0)), q(1, 1));
        assert_eq!(coeff(&p, (2, 0)), q(-1, 10));
        let p = parse_poly("x/10 + t/100").unwrap();
        assert_eq!(coeff(&p, (0, 1)), q(1, 10));
        assert_eq!(coeff(&p, (1, 0)), q(1, 100));
        assert_eq!(p.terms().count(), 2);
        // unicode operators and decimals
        assert_eq!(parse_poly("1 \u{2212} 0.1\u{d7}t").unwrap(), parse_poly("1 - t/10").unwrap());
    }

    #[test]
    fn precedence() {
        assert_eq!(parse_poly("-t^2").unwrap(), parse_poly("-(t*t)").unwrap());
        assert_eq!(parse_poly("2*(t + x)^2").unwrap().to_string(), "2*t^2 + 4*t*x + 2*x^2");
        assert_eq!(parse_poly("1/2/2").unwrap(), Poly2::constant(q(1, 4)));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_poly("t / x").unwrap_err(),
            ExprError::NotPolynomial { pos: 3, msg: "division by a non-constant".into() }
        );
        assert!(matches!(parse_poly("t^-1"), Err(ExprError::NotPolynomial { pos: 3, .. })));
        assert!(matches!(parse_poly("t^(1/2)"), Err(ExprError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_poly("1 +"), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(matches!(parse_poly("y + 1"), Err(ExprError::NotPolynomial { pos: 1, .. })));
        assert!(matches!(parse_poly("(t"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_poly("t $"), Err(ExprError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_poly("1/(t - t)"), Err(ExprError::NotPolynomial { .. })));
        assert!(matches!(parse_poly("t t"), Err(ExprError::Syntax { pos: 3, .. })));
    }

    #[test]
    fn lowering_to_series() {
        let s = parse_poly("1 - t^2/10").unwrap().to_series::<f64>(4);
        assert_eq!(s.coeff(0, 0).re, 1.0);
        assert_eq!(s.coeff(2, 0).re, -0.1);
        // truncated away
        let s = parse_poly("t^5 + x").unwrap().to_series::<f64>(3);
        assert_eq!(s.terms().count(), 1);
    }

    fn arb_poly() -> impl Strategy<Value = Poly2> {
        prop::collection::vec(((0u32..4, 0u32..4), -20i64..20, 1i64..12), 0..6).prop_map(|ts| {
            let mut p = Poly2::default();
            for (k, n, d) in ts {
                p.add_term(k, q(n, d));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(p in arb_poly()) {
            let printed = p.to_string();
            let back = parse_poly(&printed).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(back.to_string(), printed);
        }
    }
}
