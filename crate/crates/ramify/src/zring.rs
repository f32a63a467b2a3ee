//! The algebra of series `sum_k b_k z^k` where `z` satisfies `z^3 = p z + q`.
//!
//! Coefficients are [`TruncatedSeries2`] values. For the calculus operations the
//! relation must be the coordinate one (`p = t`, `q = x`): every element can then be
//! rewritten with coefficients depending on `p` alone by substituting `q = z^3 - p z`,
//! a representation in which `(p, z)` are independent and division by `3z^2 - p`
//! is well defined.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::fixedpoint::{RootChoice, SolutionData};
use crate::scalar::{c_div, c_div_re, c_f64, c_int, c_ratio, c_re, modulus, Real, C};
use crate::series::{SeriesError, TruncatedSeries2, Var};

type Ts<T> = TruncatedSeries2<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZRingError {
    #[error("elements use different relations z^3 = p z + q")]
    RelationMismatch,
    #[error("operation needs the coordinate relation p = t, q = x")]
    NotCoordinate,
    #[error("not divisible by 3z^2 - p: remainder norm {residual:e}")]
    NotDivisible { residual: f64 },
    #[error("invalid Cauchy datum: {0}")]
    InvalidDatum(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// The pair `(p, q)` in `z^3 = p z + q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation<T: Real> {
    p: Ts<T>,
    q: Ts<T>,
}

impl<T: Real> Relation<T> {
    pub fn new(p: Ts<T>, q: Ts<T>) -> Result<Self, ZRingError> {
        if p.order() != q.order() {
            return Err(SeriesError::OrderMismatch { left: p.order(), right: q.order() }.into());
        }
        Ok(Self { p, q })
    }

    /// `p = t`, `q = x`: series coefficients are read as functions of `(p, q)`.
    pub fn coordinates(order: usize) -> Self {
        Self { p: Ts::t(order), q: Ts::x(order) }
    }

    pub fn is_coordinate(&self) -> bool {
        self.p == Ts::t(self.order()) && self.q == Ts::x(self.order())
    }

    pub fn p(&self) -> &Ts<T> {
        &self.p
    }

    pub fn q(&self) -> &Ts<T> {
        &self.q
    }

    pub fn order(&self) -> usize {
        self.p.order()
    }
}

#[derive(Debug, Clone)]
pub struct ZElement<T: Real> {
    coeffs: Vec<Ts<T>>,
    relation: Arc<Relation<T>>,
}

impl<T: Real> ZElement<T> {
    pub fn new(coeffs: Vec<Ts<T>>, relation: Arc<Relation<T>>) -> Result<Self, ZRingError> {
        let order = relation.order();
        if let Some(bad) = coeffs.iter().find(|c| c.order() != order) {
            return Err(SeriesError::OrderMismatch { left: order, right: bad.order() }.into());
        }
        Ok(Self { coeffs, relation })
    }

    pub fn zero(relation: Arc<Relation<T>>) -> Self {
        Self { coeffs: Vec::new(), relation }
    }

    /// `c z^k`.
    pub fn monomial(relation: Arc<Relation<T>>, k: usize, c: Ts<T>) -> Result<Self, ZRingError> {
        let zero = Ts::zero(relation.order());
        let mut coeffs = vec![zero; k];
        coeffs.push(c);
        Self::new(coeffs, relation)
    }

    pub fn relation(&self) -> &Arc<Relation<T>> {
        &self.relation
    }

    pub fn coeffs(&self) -> &[Ts<T>] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn order(&self) -> usize {
        self.relation.order()
    }

    /// Coefficient of `z^k`; zero for negative or out-of-range `k`.
    pub fn coeff(&self, k: isize) -> Ts<T> {
        usize::try_from(k)
            .ok()
            .and_then(|k| self.coeffs.get(k).cloned())
            .unwrap_or_else(|| Ts::zero(self.order()))
    }

    fn same_relation(&self, other: &Self) -> Result<(), ZRingError> {
        if Arc::ptr_eq(&self.relation, &other.relation) || self.relation == other.relation {
            Ok(())
        } else {
            Err(ZRingError::RelationMismatch)
        }
    }

    fn with_coeffs(&self, coeffs: Vec<Ts<T>>) -> Self {
        Self { coeffs, relation: Arc::clone(&self.relation) }
    }

    pub fn add(&self, other: &Self) -> Result<Self, ZRingError> {
        self.same_relation(other)?;
        let n = self.len().max(other.len());
        Ok(self.with_coeffs((0..n as isize).map(|k| &self.coeff(k) + &other.coeff(k)).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ZRingError> {
        self.same_relation(other)?;
        let n = self.len().max(other.len());
        Ok(self.with_coeffs((0..n as isize).map(|k| &self.coeff(k) - &other.coeff(k)).collect()))
    }

    pub fn scale(&self, c: C<T>) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|b| b.scale(c)).collect())
    }

    /// Largest coefficient modulus over all `z`-coefficients.
    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().map(Ts::max_abs_coeff).fold(T::zero(), T::max)
    }

    /// Rewrite with `z`-degree at most 2 using `z^k = p z^{k-2} + q z^{k-3}`.
    pub fn reduce(&self) -> Self {
        let order = self.order();
        let mut c = self.coeffs.clone();
        c.resize(c.len().max(3), Ts::zero(order));
        let (p, q) = (self.relation.p(), self.relation.q());
        for k in (3..c.len()).rev() {
            if c[k].is_zero() {
                continue;
            }
            let top = std::mem::replace(&mut c[k], Ts::zero(order));
            c[k - 2] += &(p * &top);
            c[k - 3] += &(q * &top);
        }
        c.truncate(3);
        self.with_coeffs(c)
    }

    /// Product in the algebra, returned in reduced form.
    pub fn zmul(&self, other: &Self) -> Result<Self, ZRingError> {
        self.same_relation(other)?;
        let (a, b) = (self.reduce(), other.reduce());
        let mut c = vec![Ts::zero(self.order()); 5];
        for (i, ai) in a.coeffs.iter().enumerate() {
            for (j, bj) in b.coeffs.iter().enumerate() {
                c[i + j] += &(ai * bj);
            }
        }
        Ok(self.with_coeffs(c).reduce())
    }

    /// `sum_k b_k(t, x) z^k` at a numeric point.
    pub fn eval(&self, t: C<T>, x: C<T>, z: C<T>) -> C<T> {
        self.coeffs.iter().rev().fold(C::zero(), |acc, b| acc * z + b.eval(t, x))
    }

    /// Largest deviation between coefficients, missing entries counting as zero.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let n = self.len().max(other.len()) as isize;
        (0..n)
            .map(|k| (&self.coeff(k) - &other.coeff(k)).max_abs_coeff())
            .fold(T::zero(), T::max)
    }

    fn require_coordinate(&self) -> Result<(), ZRingError> {
        if self.relation.is_coordinate() {
            Ok(())
        } else {
            Err(ZRingError::NotCoordinate)
        }
    }

    /// Representation whose coefficients depend on `p` only (`q = z^3 - p z` substituted).
    pub fn canonical(&self) -> Result<Self, ZRingError> {
        self.require_coordinate()?;
        let order = self.order();
        let mut out: Vec<Ts<T>> = Vec::new();
        for (k, b) in self.coeffs.iter().enumerate() {
            for (l, m, c) in b.terms() {
                // c p^l (z^3 - p z)^m z^k
                let mut binom = 1i64;
                for i in 0..=m {
                    let j = k + 3 * (m - i) + i;
                    if out.len() <= j {
                        out.resize(j + 1, Ts::zero(order));
                    }
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    let term = Ts::monomial(order, l + i, 0, c * c_int(sign * binom));
                    out[j] += &term;
                    binom = binom * (m - i) as i64 / (i as i64 + 1);
                }
            }
        }
        Ok(self.with_coeffs(out))
    }

    /// The normalized `q`-primitive: `w_0 = 0`, `w_j = (1/j)(-p u_{j-1} + 3 u_{j-3})`.
    ///
    /// With the coordinate relation the input is first made `q`-free, otherwise the
    /// coefficients are taken as they stand.
    pub fn primitive_q(&self) -> Self {
        let u = if self.relation.is_coordinate() {
            self.canonical().expect("coordinate relation")
        } else {
            self.clone()
        };
        u.primitive_q_raw()
    }

    pub(crate) fn primitive_q_raw(&self) -> Self {
        let order = self.order();
        let p = self.relation.p();
        let mut w = vec![Ts::zero(order); self.len() + 3];
        for (j, wj) in w.iter_mut().enumerate().skip(1) {
            let mut acc = (p * &self.coeff(j as isize - 1)).scale(-C::<T>::one());
            acc.add_scaled(c_int(3), &self.coeff(j as isize - 3));
            *wj = acc.scale(c_ratio(1, j as i64));
        }
        self.with_coeffs(w)
    }

    /// `d/dq`; errors when the result leaves the algebra.
    pub fn diff_q(&self) -> Result<Self, ZRingError> {
        let u = self.canonical()?;
        // d/dq sum u_k z^k = (sum k u_k z^{k-1}) / (3z^2 - p)
        let f: Vec<Ts<T>> = (1..u.len()).map(|k| u.coeffs[k].scale(c_int(k as i64))).collect();
        let (quot, rem) = divide_by_3z2_minus_p(&f, u.relation.p());
        check_remainder(&rem)?;
        Ok(self.with_coeffs(quot))
    }

    /// `d/dp` at fixed `q`; errors when the result leaves the algebra.
    pub fn diff_p(&self) -> Result<Self, ZRingError> {
        let u = self.canonical()?;
        // sum u_k' z^k + z (sum k u_k z^{k-1}) / (3z^2 - p)
        let f: Vec<Ts<T>> = (0..u.len()).map(|k| u.coeffs[k].scale(c_int(k as i64))).collect();
        let (quot, rem) = divide_by_3z2_minus_p(&f, u.relation.p());
        check_remainder(&rem)?;
        let mut out: Vec<Ts<T>> = u.coeffs.iter().map(|c| c.diff(Var::T)).collect();
        out.resize(out.len().max(quot.len()), Ts::zero(self.order()));
        for (o, qk) in out.iter_mut().zip(&quot) {
            *o += qk;
        }
        Ok(self.with_coeffs(out))
    }

    /// `d/dp` of the `q`-primitive of `self`, in closed form:
    /// `sum_j (1/j)(3a'_{j-3} - p a'_{j-1} - a_{j-1}) z^j + z sum_j a_j z^j`.
    pub fn diff_p_of_primitive(&self) -> Result<Self, ZRingError> {
        let a = self.canonical()?;
        let order = self.order();
        let p = a.relation.p().clone();
        let da: Vec<Ts<T>> = a.coeffs.iter().map(|c| c.diff(Var::T)).collect();
        let get = |v: &[Ts<T>], k: isize| -> Ts<T> {
            usize::try_from(k).ok().and_then(|k| v.get(k).cloned()).unwrap_or_else(|| Ts::zero(order))
        };
        let mut out = vec![Ts::zero(order); a.len() + 3];
        for (j, oj) in out.iter_mut().enumerate().skip(1) {
            let j = j as isize;
            let mut acc = get(&da, j - 3).scale(c_int(3));
            acc -= &(&p * &get(&da, j - 1));
            acc -= &a.coeff(j - 1);
            let mut term = acc.scale(c_ratio(1, j as i64));
            term += &a.coeff(j - 1);
            *oj = term;
        }
        Ok(self.with_coeffs(out))
    }
}

fn check_remainder<T: Real>(rem: &[Ts<T>; 2]) -> Result<(), ZRingError> {
    let residual = rem[0].max_abs_coeff().max(rem[1].max_abs_coeff());
    if residual > T::tolerance(8) {
        Err(ZRingError::NotDivisible { residual: residual.to_f64_lossy() })
    } else {
        Ok(())
    }
}

/// Polynomial division of `sum_k f_k z^k` by `3z^2 - p`: returns the quotient and the
/// remainder `r_0 + r_1 z`.
pub fn divide_by_3z2_minus_p<T: Real>(f: &[Ts<T>], p: &Ts<T>) -> (Vec<Ts<T>>, [Ts<T>; 2]) {
    let order = p.order();
    let mut r: Vec<Ts<T>> = f.to_vec();
    r.resize(r.len().max(2), Ts::zero(order));
    let mut quot = vec![Ts::zero(order); r.len().saturating_sub(2)];
    let third = c_ratio::<T>(1, 3);
    for j in (2..r.len()).rev() {
        if r[j].is_zero() {
            continue;
        }
        let qj = r[j].scale(third);
        r[j - 2] += &(p * &qj);
        quot[j - 2] = qj;
    }
    let r1 = r[1].clone();
    let r0 = r[0].clone();
    (quot, [r0, r1])
}

/// The three roots of `z^3 - p z - q` at numeric `(p, q)` (Durand-Kerner).
pub fn cubic_roots<T: Real>(p: C<T>, q: C<T>) -> [C<T>; 3] {
    let f = |z: C<T>| z * z * z - p * z - q;
    let bound = T::one() + modulus(p).max(modulus(q));
    let seed = c_f64::<T>(0.4, 0.9);
    let mut z = [c_re(bound) * seed, c_re(bound) * seed * seed, c_re(bound) * seed * seed * seed];
    let tol = T::tolerance(0);
    for _ in 0..500 {
        let mut delta = T::zero();
        for i in 0..3 {
            let mut den = C::<T>::one();
            for j in 0..3 {
                if i != j {
                    den = den * (z[i] - z[j]);
                }
            }
            if den.is_zero() {
                continue;
            }
            let step = c_div(f(z[i]), den);
            z[i] = z[i] - step;
            delta = delta.max(modulus(step));
        }
        if delta < tol {
            break;
        }
    }
    z
}

/// Ramified Cauchy datum `u(0, x) = sum_j c_j x^{1 + (j-1)/3}`, `j >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyDatum<T: Real> {
    terms: BTreeMap<usize, C<T>>,
}

impl<T: Real> CauchyDatum<T> {
    pub fn new(terms: impl IntoIterator<Item = (usize, C<T>)>) -> Result<Self, ZRingError> {
        let mut map = BTreeMap::new();
        for (j, c) in terms {
            if j == 0 {
                return Err(ZRingError::InvalidDatum("term indices start at 1".into()));
            }
            if !c.is_zero() {
                let e = map.entry(j).or_insert_with(C::<T>::zero);
                *e = *e + c;
            }
        }
        for j in [1, 2] {
            if map.get(&j).is_none_or(|c| modulus(*c) == T::zero()) {
                let why = if j == 2 { " (the eikonal matrix M is singular otherwise)" } else { "" };
                return Err(ZRingError::InvalidDatum(format!("c_{j} must be nonzero{why}")));
            }
        }
        Ok(Self { terms: map })
    }

    /// `c_1, c_2, ...` in sequence.
    pub fn from_coeffs(coeffs: &[C<T>]) -> Result<Self, ZRingError> {
        Self::new(coeffs.iter().enumerate().map(|(i, c)| (i + 1, *c)))
    }

    pub fn terms(&self) -> &BTreeMap<usize, C<T>> {
        &self.terms
    }

    /// Reads back the datum encoded by initial slices `b_k(0, x)`, using
    /// `u(0, x) = sum_k (3/k) b_{k-3}(0, x) x^{k/3}` at `p = 0`, `z = x^{1/3}`.
    pub fn from_slices(slices: &[Ts<T>]) -> BTreeMap<usize, C<T>> {
        let mut out: BTreeMap<usize, C<T>> = BTreeMap::new();
        for (i, b) in slices.iter().enumerate() {
            let k = i + 3;
            for (l, m, c) in b.terms() {
                if l == 0 {
                    // x^{m + k/3} = x^{1 + (j-1)/3} with j = 3m + k - 2
                    let j = 3 * m + k - 2;
                    let e = out.entry(j).or_insert_with(C::<T>::zero);
                    *e = *e + c_div_re(c * c_int(3), T::from_int(k as i64));
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn matches(&self, other: &BTreeMap<usize, C<T>>, tol: T) -> bool {
        let keys: std::collections::BTreeSet<_> = self.terms.keys().chain(other.keys()).collect();
        keys.into_iter().all(|j| {
            let a = self.terms.get(j).copied().unwrap_or_else(C::zero);
            let b = other.get(j).copied().unwrap_or_else(C::zero);
            modulus(a - b) <= tol
        })
    }
}

/// Initial slices for a datum: `p(0, x) = 0`, `q(0, x) = x` and `b_k(0, x)` for `k < n`.
///
/// Datum terms not produced by `overrides` are placed canonically as the constant
/// `b_{j-1}(0, x) = ((j + 2)/3) c_j`.
pub fn datum_to_initial<T: Real>(
    datum: &CauchyDatum<T>,
    overrides: &BTreeMap<usize, Ts<T>>,
    n: usize,
    order: usize,
) -> Result<SolutionData<T>, ZRingError> {
    let mut slices = vec![Ts::zero(order); n];
    for (&k, b) in overrides {
        if k >= n {
            return Err(ZRingError::InvalidDatum(format!("override b_{k} beyond data length {n}")));
        }
        if !b.is_x_only() {
            return Err(ZRingError::InvalidDatum(format!("override b_{k} depends on t")));
        }
        slices[k] = b.with_order(order);
    }
    let produced = CauchyDatum::from_slices(&slices);
    let tol = T::tolerance(5);
    for (&j, &c) in &datum.terms {
        let rest = c - produced.get(&j).copied().unwrap_or_else(C::zero);
        if modulus(rest) <= tol {
            continue;
        }
        let k = j - 1;
        if k >= n {
            return Err(ZRingError::InvalidDatum(format!("term c_{j} needs b_{k}, data length is {n}")));
        }
        if overrides.contains_key(&k) {
            return Err(ZRingError::InvalidDatum(format!("term c_{j} conflicts with override b_{k}")));
        }
        slices[k] = Ts::constant(order, c_div_re(rest * c_int(j as i64 + 2), T::from_int(3)));
    }
    if !datum.matches(&CauchyDatum::from_slices(&slices), tol) {
        return Err(ZRingError::InvalidDatum("overrides do not reproduce the datum".into()));
    }
    Ok(SolutionData {
        p: Ts::zero(order),
        q: Ts::x(order),
        b: slices,
        root_choice: RootChoice::Plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use twofloat::TwoFloat;

    type F = TwoFloat;
    type S = Ts<F>;

    const ORDER: usize = 8;

    fn coord() -> Arc<Relation<F>> {
        Arc::new(Relation::coordinates(ORDER))
    }

    fn p() -> S {
        S::t(ORDER)
    }

    fn q() -> S {
        S::x(ORDER)
    }

    fn cst(v: f64) -> S {
        S::constant(ORDER, c_f64(v, 0.0))
    }

    fn elem(coeffs: Vec<S>) -> ZElement<F> {
        ZElement::new(coeffs, coord()).unwrap()
    }

    fn z_pow(k: usize) -> ZElement<F> {
        ZElement::monomial(coord(), k, S::one(ORDER)).unwrap()
    }

    fn close(a: &ZElement<F>, b: &ZElement<F>, tol: f64) -> bool {
        a.max_abs_diff(b).to_f64_lossy() <= tol
    }

    #[test]
    fn reduce_examples() {
        assert!(close(&z_pow(3).reduce(), &elem(vec![q(), p()]), 0.0));
        assert!(close(&z_pow(4).reduce(), &elem(vec![S::zero(ORDER), q(), p()]), 0.0));
        // -(p/2) z^2 + (3/4) z^4 -> (3q/4) z + (p/4) z^2
        let u = elem(vec![S::zero(ORDER), S::zero(ORDER), p().scale(c_ratio(-1, 2)), S::zero(ORDER), cst(0.75)]);
        let expect = elem(vec![S::zero(ORDER), q().scale(c_ratio(3, 4)), p().scale(c_ratio(1, 4))]);
        assert!(close(&u.reduce(), &expect, 1e-30));
        assert_eq!(u.reduce().len(), 3);
    }

    #[test]
    fn zmul_examples() {
        let z = z_pow(1);
        assert!(close(&z.zmul(&z).unwrap(), &z_pow(2), 0.0));
        assert!(close(&z.zmul(&z_pow(2)).unwrap(), &elem(vec![q(), p()]), 0.0));
        let u = elem(vec![cst(1.5), p(), q()]);
        assert!(close(&z_pow(0).zmul(&u).unwrap(), &u, 0.0));
        let other = Arc::new(Relation::new(cst(1.0), cst(2.0)).unwrap());
        let v = ZElement::monomial(other, 1, S::one(ORDER)).unwrap();
        assert_eq!(z.zmul(&v).unwrap_err(), ZRingError::RelationMismatch);
    }

    #[test]
    fn primitive_of_z() {
        let w = z_pow(1).primitive_q();
        assert!(w.coeff(0).is_zero());
        assert_eq!(w.len(), 5);
        let expect = elem(vec![S::zero(ORDER), S::zero(ORDER), p().scale(c_ratio(-1, 2)), S::zero(ORDER), cst(0.75)]);
        assert!(close(&w, &expect, 1e-30));
        let reduced = elem(vec![S::zero(ORDER), q().scale(c_ratio(3, 4)), p().scale(c_ratio(1, 4))]);
        assert!(close(&w.reduce(), &reduced, 1e-30));
    }

    #[test]
    fn primitive_of_one_and_zero() {
        let w = z_pow(0).primitive_q();
        // -p z + z^3 = q
        assert!(close(&w.reduce(), &elem(vec![q()]), 1e-30));
        assert!(close(&w.diff_q().unwrap(), &z_pow(0), 1e-30));
        assert!(ZElement::zero(coord()).primitive_q().max_abs_coeff() == F::zero());
    }

    #[test]
    fn diff_q_examples() {
        // (3qz + pz^2)/4 -> z
        let u = elem(vec![S::zero(ORDER), q().scale(c_ratio(3, 4)), p().scale(c_ratio(1, 4))]);
        assert!(close(&u.diff_q().unwrap(), &z_pow(1), 1e-30));
        // a constant in p alone
        let a = elem(vec![&cst(2.0) + &p()]);
        assert!(a.diff_q().unwrap().max_abs_coeff() == F::zero());
        // q z is not in the image of the primitive
        let bad = elem(vec![S::zero(ORDER), q()]);
        assert!(matches!(bad.diff_q(), Err(ZRingError::NotDivisible { .. })));
    }

    #[test]
    fn calculus_needs_coordinates() {
        let rel = Arc::new(Relation::new(S::t(ORDER).scale(c_ratio(1, 2)), q()).unwrap());
        let u = ZElement::monomial(rel, 1, S::one(ORDER)).unwrap();
        assert_eq!(u.diff_q().unwrap_err(), ZRingError::NotCoordinate);
        assert_eq!(u.diff_p().unwrap_err(), ZRingError::NotCoordinate);
    }

    #[test]
    fn diff_p_kills_q() {
        // reduce(z^3 - p z) = q
        let u = z_pow(3).sub(&elem(vec![S::zero(ORDER), p()])).unwrap().reduce();
        assert!(u.diff_p().unwrap().max_abs_coeff() < F::tolerance(0));
        assert!(ZElement::zero(coord()).diff_p_of_primitive().unwrap().max_abs_coeff() == F::zero());
    }

    #[test]
    fn boxed_formula_matches_chain_rule() {
        let a = elem(vec![&cst(1.0) + &p(), p().scale(c_ratio(2, 3)), &(&p() * &p()) + &cst(-0.5)]);
        let closed = a.diff_p_of_primitive().unwrap();
        let chain = a.primitive_q().diff_p().unwrap();
        assert!(close(&closed, &chain, 1e-28));
    }

    /// Value of `sum a_j(p) z^j` on the branch of `z` nearest `z_near`.
    fn value_near(u: &ZElement<F>, p0: f64, q0: f64, z_near: C<F>) -> (C<F>, C<F>) {
        let roots = cubic_roots(c_f64(p0, 0.0), c_f64(q0, 0.0));
        let z = *roots.iter().min_by(|a, b| modulus::<F>(**a - z_near).partial_cmp(&modulus(**b - z_near)).unwrap()).unwrap();
        (u.eval(c_f64(p0, 0.0), c_f64(q0, 0.0), z), z)
    }

    #[test]
    fn boxed_formula_matches_finite_difference() {
        let z = z_pow(1);
        let w = z.primitive_q();
        let dw = z.diff_p_of_primitive().unwrap();
        let (p0, q0, h) = (0.1, 0.2, 1e-7);
        for z0 in cubic_roots(c_f64::<F>(p0, 0.0), c_f64(q0, 0.0)) {
            let (fp, _) = value_near(&w, p0 + h, q0, z0);
            let (fm, _) = value_near(&w, p0 - h, q0, z0);
            let fd = c_div_re(fp - fm, F::from_f64_lossy(2.0 * h));
            let exact = dw.eval(c_f64(p0, 0.0), c_f64(q0, 0.0), z0);
            assert!(modulus(fd - exact).to_f64_lossy() < 1e-6, "{fd} vs {exact}");
        }
    }

    #[test]
    fn reduction_agrees_numerically() {
        let mut seed = 7u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..50 {
            let (p0, q0) = (next(), next());
            let rel = Arc::new(Relation::new(cst(p0), cst(q0)).unwrap());
            let coeffs: Vec<S> = (0..7).map(|_| cst(next())).collect();
            let u = ZElement::new(coeffs, rel).unwrap();
            let r = u.reduce();
            for z0 in cubic_roots(c_f64::<F>(p0, 0.0), c_f64(q0, 0.0)) {
                let zero = c_f64(0.0, 0.0);
                let d = modulus(u.eval(zero, zero, z0) - r.eval(zero, zero, z0));
                assert!(d.to_f64_lossy() < 1e-20, "{d:e}");
            }
        }
    }

    #[test]
    fn cubic_roots_are_roots() {
        let (p0, q0) = (c_f64::<F>(0.3, 0.1), c_f64::<F>(-0.7, 0.2));
        for z in cubic_roots(p0, q0) {
            assert!(modulus(z * z * z - p0 * z - q0) < F::tolerance(2));
        }
    }

    #[test]
    fn datum_canonical_placement() {
        let d = CauchyDatum::from_coeffs(&[c_f64::<F>(1.0, 0.0), c_ratio(3, 4)]).unwrap();
        let init = datum_to_initial(&d, &BTreeMap::new(), 6, ORDER).unwrap();
        assert!(init.p.is_zero());
        assert_eq!(init.q, q());
        let one = S::one(ORDER);
        assert!((&init.b[0] - &one).max_abs_coeff() < F::tolerance(0));
        assert!((&init.b[1] - &one).max_abs_coeff() < F::tolerance(0));
        assert!(init.b[2..].iter().all(S::is_zero));

        let d3 = CauchyDatum::from_coeffs(&[c_f64::<F>(1.0, 0.0), c_ratio(3, 4), c_ratio(3, 50)]).unwrap();
        let init3 = datum_to_initial(&d3, &BTreeMap::new(), 6, ORDER).unwrap();
        assert!((&init3.b[2] - &S::constant(ORDER, c_ratio(1, 10))).max_abs_coeff() < F::tolerance(1));
    }

    #[test]
    fn datum_with_overrides() {
        // x + (3/4) x^{4/3} + (3/50) x^{8/3} + x^3/20
        let d = CauchyDatum::new([
            (1, c_f64::<F>(1.0, 0.0)),
            (2, c_ratio(3, 4)),
            (6, c_ratio(3, 50)),
            (7, c_ratio(1, 20)),
        ])
        .unwrap();
        let tenth_x = q().scale(c_ratio(1, 10));
        let overrides = BTreeMap::from([(2, tenth_x.clone()), (3, tenth_x.clone())]);
        let init = datum_to_initial(&d, &overrides, 8, ORDER).unwrap();
        assert_eq!(init.b[2], tenth_x);
        assert_eq!(init.b[3], tenth_x);
        assert!((&init.b[1] - &S::one(ORDER)).max_abs_coeff() < F::tolerance(0));
        assert!(init.b[4..].iter().all(S::is_zero));
        assert!(d.matches(&CauchyDatum::from_slices(&init.b), F::tolerance(5)));
        // an override that adds an unknown term is rejected
        let stray = BTreeMap::from([(4, q())]);
        assert!(datum_to_initial(&d, &stray, 8, ORDER).is_err());
    }

    #[test]
    fn degenerate_datum_rejected() {
        assert!(CauchyDatum::from_coeffs(&[c_f64::<F>(0.0, 0.0), c_ratio(3, 4)]).is_err());
        assert!(CauchyDatum::from_coeffs(&[c_f64::<F>(1.0, 0.0)]).is_err());
        assert!(CauchyDatum::from_coeffs(&[c_f64::<F>(1.0, 0.0), c_f64(0.0, 0.0), c_f64(1.0, 0.0)]).is_err());
    }

    fn arb_elem() -> impl Strategy<Value = ZElement<F>> {
        let n = 4usize;
        let per = ORDER * (ORDER + 1) / 2;
        prop::collection::vec(prop::collection::vec(-8i32..=8, per), n).prop_map(move |cs| {
            let coeffs = cs
                .into_iter()
                .map(|v| {
                    let mut s = S::zero(ORDER);
                    let mut it = v.into_iter();
                    for d in 0..ORDER {
                        for m in 0..=d {
                            s.set(d - m, m, c_f64(it.next().unwrap() as f64 / 8.0, 0.0));
                        }
                    }
                    s
                })
                .collect();
            elem(coeffs)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn diff_q_inverts_primitive(u in arb_elem()) {
            let w = u.primitive_q();
            prop_assert!(w.coeff(0).is_zero());
            let back = w.diff_q().unwrap();
            let err = back.max_abs_diff(&u.canonical().unwrap());
            prop_assert!(err < F::tolerance(5), "{}", err);
        }
    }
}
