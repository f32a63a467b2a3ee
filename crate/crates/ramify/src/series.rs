//! Bivariate power series in `(t, x)` truncated at a fixed total degree.
//!
//! A series of order `M` keeps the monomials `t^l x^m` with `l + m <= M - 1`.
//! Coefficients are stored densely, grouped by total degree.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{c_div_re, c_int, c_inv, c_re, modulus, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("truncation orders differ: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("initial value must not depend on t")]
    InitDependsOnT,
    #[error("constant term has modulus {modulus:e}, too small to invert")]
    VanishingConstant { modulus: f64 },
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
}

/// Independent variable of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
}

#[inline]
fn base(deg: usize) -> usize {
    deg * (deg + 1) / 2
}

#[inline]
fn index(l: usize, m: usize) -> usize {
    base(l + m) + m
}

#[derive(Clone, PartialEq)]
pub struct TruncatedSeries2<T: Real> {
    order: usize,
    coeffs: Vec<C<T>>,
}

impl<T: Real> TruncatedSeries2<T> {
    pub fn zero(order: usize) -> Self {
        Self { order, coeffs: vec![C::zero(); base(order)] }
    }

    pub fn constant(order: usize, c: C<T>) -> Self {
        Self::monomial(order, 0, 0, c)
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, C::one())
    }

    /// `c t^l x^m`, or zero if the monomial is beyond the truncation.
    pub fn monomial(order: usize, l: usize, m: usize, c: C<T>) -> Self {
        let mut s = Self::zero(order);
        s.set(l, m, c);
        s
    }

    /// The series `t`.
    pub fn t(order: usize) -> Self {
        Self::monomial(order, 1, 0, C::one())
    }

    /// The series `x`.
    pub fn x(order: usize) -> Self {
        Self::monomial(order, 0, 1, C::one())
    }

    pub fn from_terms<I>(order: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C<T>)>,
    {
        let mut s = Self::zero(order);
        for (l, m, c) in terms {
            if l + m < order {
                let i = index(l, m);
                s.coeffs[i] = s.coeffs[i] + c;
            }
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `t^l x^m`; zero outside the stored range.
    pub fn coeff(&self, l: usize, m: usize) -> C<T> {
        if l + m < self.order {
            self.coeffs[index(l, m)]
        } else {
            C::zero()
        }
    }

    /// Sets the coefficient of `t^l x^m`; ignored beyond the truncation.
    pub fn set(&mut self, l: usize, m: usize, c: C<T>) {
        if l + m < self.order {
            self.coeffs[index(l, m)] = c;
        }
    }

    /// Nonzero terms as `(l, m, coefficient)`, by increasing total degree.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, C<T>)> + '_ {
        (0..self.order).flat_map(move |d| {
            (0..=d).filter_map(move |m| {
                let c = self.coeffs[base(d) + m];
                (!c.is_zero()).then_some((d - m, m, c))
            })
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// True when no stored term carries a power of `t`.
    pub fn is_x_only(&self) -> bool {
        self.terms().all(|(l, _, _)| l == 0)
    }

    /// Copy at another order: truncates when lowering, pads with zeros when raising.
    pub fn with_order(&self, order: usize) -> Self {
        let mut s = Self::zero(order);
        let n = base(order.min(self.order));
        s.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        s
    }

    /// Restriction to `t = 0`, as a series in `x`.
    pub fn at_t0(&self) -> Self {
        Self::from_terms(self.order, (0..self.order).map(|m| (0, m, self.coeff(0, m))))
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().map(|c| modulus(*c)).fold(T::zero(), T::max)
    }

    fn check(&self, other: &Self) -> Result<(), SeriesError> {
        if self.order == other.order {
            Ok(())
        } else {
            Err(SeriesError::OrderMismatch { left: self.order, right: other.order })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        Ok(self.product(other))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect();
        Self { order: self.order, coeffs }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().map(|a| *a * c).collect() }
    }

    pub fn scale_re(&self, r: T) -> Self {
        self.scale(c_re(r))
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, c: C<T>, other: &Self) {
        assert_eq!(self.order, other.order, "truncation orders differ");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + c * *b;
        }
    }

    /// Per total degree, whether the block holds a nonzero coefficient.
    fn degree_mask(&self) -> Vec<bool> {
        (0..self.order)
            .map(|d| self.coeffs[base(d)..base(d + 1)].iter().any(|c| !c.is_zero()))
            .collect()
    }

    /// Truncated Cauchy product; orders must agree.
    fn product(&self, other: &Self) -> Self {
        let n = self.order;
        let mut out = vec![C::<T>::zero(); base(n)];
        let other_mask = other.degree_mask();
        for da in 0..n {
            for ma in 0..=da {
                let a = self.coeffs[base(da) + ma];
                if a.is_zero() {
                    continue;
                }
                for db in 0..n - da {
                    if !other_mask[db] {
                        continue;
                    }
                    let src = &other.coeffs[base(db)..base(db + 1)];
                    let at = base(da + db) + ma;
                    for (dst, b) in out[at..at + db + 1].iter_mut().zip(src) {
                        *dst = *dst + a * *b;
                    }
                }
            }
        }
        Self { order: n, coeffs: out }
    }

    /// Formal partial derivative; the order is kept, so the top degree is lost.
    pub fn diff(&self, var: Var) -> Self {
        let mut s = Self::zero(self.order);
        for (l, m, c) in self.terms() {
            match var {
                Var::T if l > 0 => s.set(l - 1, m, c * c_int(l as i64)),
                Var::X if m > 0 => s.set(l, m - 1, c * c_int(m as i64)),
                _ => {}
            }
        }
        s
    }

    /// Antiderivative in `t` taking the value `init(x)` at `t = 0`.
    pub fn integrate_t(&self, init: &Self) -> Result<Self, SeriesError> {
        self.check(init)?;
        if !init.is_x_only() {
            return Err(SeriesError::InitDependsOnT);
        }
        let mut s = init.clone();
        for (l, m, c) in self.terms() {
            s.set(l + 1, m, c_div_re(c, T::from_int(l as i64 + 1)));
        }
        Ok(s)
    }

    /// Multiplicative inverse, with the default invertibility threshold `10^-DIGITS`.
    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        self.reciprocal_with_threshold(T::tolerance(0))
    }

    pub fn reciprocal_with_threshold(&self, threshold: T) -> Result<Self, SeriesError> {
        let n = self.order;
        let mut v = Self::zero(n);
        if n == 0 {
            return Ok(v);
        }
        let c0 = self.coeffs[0];
        let m0 = modulus(c0);
        if m0.partial_cmp(&threshold) != Some(std::cmp::Ordering::Greater) {
            return Err(SeriesError::VanishingConstant { modulus: m0.to_f64_lossy() });
        }
        let inv0 = c_inv(c0);
        v.coeffs[0] = inv0;
        let nonzero: Vec<(usize, usize, C<T>)> = self.terms().filter(|&(i, j, _)| i + j > 0).collect();
        for d in 1..n {
            for m in 0..=d {
                let l = d - m;
                let mut acc = C::<T>::zero();
                for &(i, j, u) in &nonzero {
                    if i + j > d {
                        break;
                    }
                    if i <= l && j <= m {
                        acc = acc + u * v.coeffs[index(l - i, m - j)];
                    }
                }
                v.coeffs[base(d) + m] = -acc * inv0;
            }
        }
        Ok(v)
    }

    /// Coefficients of the univariate polynomial in `t` obtained by fixing `x`.
    pub fn restrict_x(&self, x: C<T>) -> Vec<C<T>> {
        (0..self.order)
            .map(|l| {
                (0..self.order - l)
                    .rev()
                    .fold(C::zero(), |acc, m| acc * x + self.coeffs[index(l, m)])
            })
            .collect()
    }

    /// Horner evaluation at `(t, x)`.
    pub fn eval(&self, t: C<T>, x: C<T>) -> C<T> {
        horner(&self.restrict_x(x), t)
    }

    /// Maximum of `|u(t, x0)|` over the sample points of `seg`.
    pub fn sup_norm(&self, x0: C<T>, seg: &Segment) -> T {
        let poly = self.restrict_x(x0);
        seg.points::<T>()
            .map(|t| modulus(horner(&poly, c_re(t))))
            .fold(T::zero(), T::max)
    }
}

pub(crate) fn horner<T: Real>(poly: &[C<T>], t: C<T>) -> C<T> {
    poly.iter().rev().fold(C::zero(), |acc, c| acc * t + *c)
}

impl<T: Real> fmt::Debug for TruncatedSeries2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries2[order {}](", self.order)?;
        fmt::Display::fmt(self, f)?;
        write!(f, ")")
    }
}

impl<T: Real> fmt::Display for TruncatedSeries2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (l, m, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let (re, im) = (c.re.to_f64_lossy(), c.im.to_f64_lossy());
            if im == 0.0 {
                write!(f, "{re}")?;
            } else {
                write!(f, "({re}{im:+}i)")?;
            }
            match l {
                0 => {}
                1 => write!(f, "*t")?,
                _ => write!(f, "*t^{l}")?,
            }
            match m {
                0 => {}
                1 => write!(f, "*x")?,
                _ => write!(f, "*x^{m}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

// Operator forms panic on order mismatch; the `Result` methods above are the checked API.

impl<T: Real> Add for &TruncatedSeries2<T> {
    type Output = TruncatedSeries2<T>;
    fn add(self, rhs: Self) -> Self::Output {
        TruncatedSeries2::add(self, rhs).expect("series orders differ")
    }
}

impl<T: Real> Sub for &TruncatedSeries2<T> {
    type Output = TruncatedSeries2<T>;
    fn sub(self, rhs: Self) -> Self::Output {
        TruncatedSeries2::sub(self, rhs).expect("series orders differ")
    }
}

impl<T: Real> Mul for &TruncatedSeries2<T> {
    type Output = TruncatedSeries2<T>;
    fn mul(self, rhs: Self) -> Self::Output {
        TruncatedSeries2::mul(self, rhs).expect("series orders differ")
    }
}

impl<T: Real> Neg for &TruncatedSeries2<T> {
    type Output = TruncatedSeries2<T>;
    fn neg(self) -> Self::Output {
        TruncatedSeries2 { order: self.order, coeffs: self.coeffs.iter().map(|c| -*c).collect() }
    }
}

impl<T: Real> AddAssign<&TruncatedSeries2<T>> for TruncatedSeries2<T> {
    fn add_assign(&mut self, rhs: &TruncatedSeries2<T>) {
        self.add_scaled(C::one(), rhs);
    }
}

impl<T: Real> SubAssign<&TruncatedSeries2<T>> for TruncatedSeries2<T> {
    fn sub_assign(&mut self, rhs: &TruncatedSeries2<T>) {
        self.add_scaled(-C::<T>::one(), rhs);
    }
}

/// Real interval `[a, b]` sampled at `samples` equispaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    a: f64,
    b: f64,
    samples: usize,
}

impl Segment {
    pub fn new(a: f64, b: f64, samples: usize) -> Result<Self, SeriesError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(SeriesError::InvalidSegment(format!("need a < b, got [{a}, {b}]")));
        }
        if samples < 2 {
            return Err(SeriesError::InvalidSegment(format!("need at least 2 samples, got {samples}")));
        }
        Ok(Self { a, b, samples })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn points<T: Real>(&self) -> impl Iterator<Item = T> {
        let (a, b) = (T::from_f64_lossy(self.a), T::from_f64_lossy(self.b));
        let last = T::from_int(self.samples as i64 - 1);
        (0..self.samples).map(move |i| a + (b - a) * T::from_int(i as i64).quot(last))
    }
}

impl Default for Segment {
    fn default() -> Self {
        Self { a: 0.0, b: 0.1, samples: 1001 }
    }
}

/// Complex unit helper for tests and callers working with `x0 = i * r`.
pub fn imag<T: Real>(r: f64) -> C<T> {
    Complex::new(T::zero(), T::from_f64_lossy(r))
}
