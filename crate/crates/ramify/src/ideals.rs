//! Exact polynomial algebra in `(p, q, xi1, xi2)`: Poisson brackets, reduced
//! Groebner bases under graded reverse lexicographic order, ideal and radical
//! membership.
//!
//! Monomials carry one extra slot used only by the radical membership test.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Number of exponent slots in a monomial.
pub const SLOTS: usize = 5;

/// Polynomial variables, in decreasing order of precedence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variable {
    P,
    Q,
    Xi1,
    Xi2,
    /// Auxiliary variable of the radical test.
    Aux,
}

impl Variable {
    pub const ALL: [Variable; SLOTS] = [Self::P, Self::Q, Self::Xi1, Self::Xi2, Self::Aux];

    pub fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            Self::P => "p",
            Self::Q => "q",
            Self::Xi1 => "xi1",
            Self::Xi2 => "xi2",
            Self::Aux => "y",
        }
    }
}

/// Exponent vector, ordered by graded reverse lexicographic order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(pub [u32; SLOTS]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; SLOTS]);

    pub fn var(v: Variable) -> Self {
        let mut e = [0; SLOTS];
        e[v.index()] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Monomial(std::array::from_fn(|i| self.0[i] + other.0[i]))
    }

    pub fn divides(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming `self` divides `other`.
    fn quotient_of(&self, other: &Self) -> Self {
        Monomial(std::array::from_fn(|i| other.0[i] - self.0[i]))
    }

    pub fn lcm(&self, other: &Self) -> Self {
        Monomial(std::array::from_fn(|i| self.0[i].max(other.0[i])))
    }

    pub fn coprime(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            // the smaller exponent in the last differing variable wins
            for i in (0..SLOTS).rev() {
                match self.0[i].cmp(&other.0[i]) {
                    Ordering::Equal => continue,
                    ord => return ord.reverse(),
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Coefficient field of a polynomial.
pub trait Field:
    Clone + PartialEq + Zero + One + Neg<Output = Self> + Sub<Output = Self> + std::ops::Div<Output = Self> + fmt::Display
{
}

impl<K> Field for K where
    K: Clone + PartialEq + Zero + One + Neg<Output = K> + Sub<Output = K> + std::ops::Div<Output = K> + fmt::Display
{
}

/// Sparse polynomial; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly<K> {
    terms: BTreeMap<Monomial, K>,
}

/// Polynomial with exact rational coefficients.
pub type RationalPoly4 = Poly<BigRational>;

impl<K: Field> Poly<K> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn constant(c: K) -> Self {
        Self::term(c, Monomial::ONE)
    }

    pub fn one() -> Self {
        Self::constant(K::one())
    }

    pub fn var(v: Variable) -> Self {
        Self::term(K::one(), Monomial::var(v))
    }

    pub fn term(c: K, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Monomial, K)>) -> Self {
        let mut out = Self::zero();
        for (m, c) in it {
            out.add_term(m, c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| *m == Monomial::ONE)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &K)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> K {
        self.terms.get(m).cloned().unwrap_or_else(K::zero)
    }

    pub fn leading(&self) -> Option<(&Monomial, &K)> {
        self.terms.last_key_value()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Whether `v` occurs in some term.
    pub fn involves(&self, v: Variable) -> bool {
        self.terms.keys().any(|m| m.0[v.index()] > 0)
    }

    fn add_term(&mut self, m: Monomial, c: K) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(e) => {
                let s = e.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *e = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    /// `self -= c * m * g`.
    fn sub_shifted(&mut self, c: &K, m: &Monomial, g: &Self) {
        for (gm, gc) in &g.terms {
            self.add_term(m.mul(gm), -(c.clone() * gc.clone()));
        }
    }

    pub fn scale(&self, c: &K) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(m, k)| (*m, k.clone() * c.clone())).collect() }
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some((_, lc)) => self.scale(&(K::one() / lc.clone())),
            None => Self::zero(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| &acc * self)
    }

    pub fn diff(&self, v: Variable) -> Self {
        let i = v.index();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = *m;
            dm.0[i] -= 1;
            let n = (0..e).fold(K::zero(), |acc, _| acc + K::one());
            out.add_term(dm, c.clone() * n);
        }
        out
    }

    /// Replace each variable by the corresponding polynomial.
    pub fn substitute(&self, images: &[Self; SLOTS]) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut t = Self::constant(c.clone());
            for (img, &e) in images.iter().zip(&m.0) {
                if e > 0 {
                    t = &t * &img.pow(e);
                }
            }
            out = &out + &t;
        }
        out
    }

    /// Fully reduced remainder of `self` on division by `basis`.
    pub fn normal_form(&self, basis: &[Self]) -> Self {
        let mut p = self.clone();
        let mut rem = Self::zero();
        while let Some((m, c)) = p.terms.pop_last() {
            let divisor = basis
                .iter()
                .filter_map(|g| g.leading().map(|(gm, gc)| (g, gm, gc)))
                .find(|(_, gm, _)| gm.divides(&m));
            match divisor {
                Some((g, gm, gc)) => {
                    let f = c / gc.clone();
                    let shift = gm.quotient_of(&m);
                    // the leading term cancels exactly; skip it
                    for (tm, tc) in g.terms.iter().rev().skip(1) {
                        p.add_term(shift.mul(tm), -(f.clone() * tc.clone()));
                    }
                }
                None => {
                    rem.terms.insert(m, c);
                }
            }
        }
        rem
    }

    fn s_polynomial(f: &Self, g: &Self) -> Self {
        let (fm, fc) = f.leading().expect("nonzero");
        let (gm, gc) = g.leading().expect("nonzero");
        let l = fm.lcm(gm);
        let mut s = Self::zero();
        s.sub_shifted(&-(K::one() / fc.clone()), &fm.quotient_of(&l), f);
        s.sub_shifted(&(K::one() / gc.clone()), &gm.quotient_of(&l), g);
        s
    }
}

impl<K: Field> Add for &Poly<K> {
    type Output = Poly<K>;
    fn add(self, rhs: Self) -> Poly<K> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl<K: Field> Sub for &Poly<K> {
    type Output = Poly<K>;
    fn sub(self, rhs: Self) -> Poly<K> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }
}

impl<K: Field> Mul for &Poly<K> {
    type Output = Poly<K>;
    fn mul(self, rhs: Self) -> Poly<K> {
        let mut out = Poly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term(a.mul(b), ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<K: Field> Neg for &Poly<K> {
    type Output = Poly<K>;
    fn neg(self) -> Poly<K> {
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect() }
    }
}

impl<K: Field> fmt::Display for Poly<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (v, &e) in Variable::ALL.iter().zip(&m.0) {
                match e {
                    0 => {}
                    1 => write!(f, "*{}", v.name())?,
                    _ => write!(f, "*{}^{e}", v.name())?,
                }
            }
        }
        Ok(())
    }
}

/// Poisson bracket with `(p, q)` as positions and `(xi1, xi2)` as momenta.
pub fn poisson<K: Field>(a: &Poly<K>, b: &Poly<K>) -> Poly<K> {
    use Variable::*;
    let mut out = Poly::zero();
    for (x, xi) in [(P, Xi1), (Q, Xi2)] {
        out = &out + &(&a.diff(xi) * &b.diff(x));
        out = &out - &(&a.diff(x) * &b.diff(xi));
    }
    out
}

/// Reduced Groebner basis of the ideal generated by `gens`, sorted by
/// decreasing leading monomial. The zero ideal gives an empty basis.
pub fn groebner<K: Field>(gens: &[Poly<K>]) -> Vec<Poly<K>> {
    let mut basis: Vec<Poly<K>> = gens.iter().filter(|g| !g.is_zero()).map(Poly::monic).collect();
    if let Some(c) = basis.iter().find(|g| g.is_constant()) {
        return vec![c.monic()];
    }
    let mut pairs: Vec<(usize, usize)> =
        (0..basis.len()).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    let lead = |g: &Poly<K>| *g.leading().expect("nonzero").0;

    // normal selection: smallest lcm first, ties broken by index
    while let Some(pos) = (0..pairs.len()).min_by(|&a, &b| {
        let key = |k: usize| {
            let (i, j) = pairs[k];
            (lead(&basis[i]).lcm(&lead(&basis[j])), j, i)
        };
        key(a).cmp(&key(b))
    }) {
        let (i, j) = pairs.swap_remove(pos);
        let (li, lj) = (lead(&basis[i]), lead(&basis[j]));
        if li.coprime(&lj) {
            continue;
        }
        let l = li.lcm(&lj);
        // chain criterion
        let chain = (0..basis.len()).any(|k| {
            k != i
                && k != j
                && lead(&basis[k]).divides(&l)
                && !pairs.contains(&(i.min(k), i.max(k)))
                && !pairs.contains(&(j.min(k), j.max(k)))
        });
        if chain {
            continue;
        }
        let h = Poly::s_polynomial(&basis[i], &basis[j]).normal_form(&basis);
        if h.is_zero() {
            continue;
        }
        if h.is_constant() {
            return vec![Poly::one()];
        }
        let k = basis.len();
        basis.push(h.monic());
        pairs.extend((0..k).map(|i| (i, k)));
    }
    reduce_basis(basis)
}

fn reduce_basis<K: Field>(basis: Vec<Poly<K>>) -> Vec<Poly<K>> {
    let lead = |g: &Poly<K>| *g.leading().expect("nonzero").0;
    let mut minimal: Vec<Poly<K>> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        let lg = lead(g);
        let redundant = basis.iter().enumerate().any(|(j, h)| {
            let lh = lead(h);
            j != i && lh.divides(&lg) && (lh != lg || j < i)
        });
        if !redundant {
            minimal.push(g.clone());
        }
    }
    let mut reduced: Vec<Poly<K>> = (0..minimal.len())
        .map(|i| {
            let others: Vec<Poly<K>> =
                minimal.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
            let g = &minimal[i];
            let (lm, lc) = g.leading().expect("nonzero");
            let tail = &g.clone() - &Poly::term(lc.clone(), *lm);
            let mut out = tail.normal_form(&others);
            out.add_term(*lm, lc.clone());
            out.monic()
        })
        .collect();
    reduced.sort_by_key(|g| std::cmp::Reverse(lead(g)));
    reduced
}

/// Ideal with a lazily computed reduced Groebner basis.
#[derive(Clone, Debug)]
pub struct PolyIdeal<K> {
    generators: Vec<Poly<K>>,
    basis: OnceLock<Vec<Poly<K>>>,
}

impl<K: Field> PolyIdeal<K> {
    pub fn new(generators: Vec<Poly<K>>) -> Self {
        Self { generators, basis: OnceLock::new() }
    }

    pub fn generators(&self) -> &[Poly<K>] {
        &self.generators
    }

    /// Order tag of the cached basis.
    pub fn order(&self) -> &'static str {
        "grevlex(p > q > xi1 > xi2 > y)"
    }

    pub fn groebner(&self) -> &[Poly<K>] {
        self.basis.get_or_init(|| groebner(&self.generators))
    }

    pub fn normal_form(&self, f: &Poly<K>) -> Poly<K> {
        f.normal_form(self.groebner())
    }

    pub fn member(&self, f: &Poly<K>) -> bool {
        self.normal_form(f).is_zero()
    }

    /// Whether some power of `f` lies in the ideal: `1` belongs to `I + <1 - y f>`.
    pub fn radical_member(&self, f: &Poly<K>) -> bool {
        assert!(
            !f.involves(Variable::Aux) && !self.generators.iter().any(|g| g.involves(Variable::Aux)),
            "auxiliary variable already in use"
        );
        if self.member(f) {
            return true;
        }
        let mut gens = self.generators.clone();
        gens.push(&Poly::one() - &(&Poly::var(Variable::Aux) * f));
        groebner(&gens).iter().any(Poly::is_constant)
    }
}

pub fn member<K: Field>(f: &Poly<K>, ideal: &PolyIdeal<K>) -> bool {
    ideal.member(f)
}

pub fn radical_member<K: Field>(f: &Poly<K>, ideal: &PolyIdeal<K>) -> bool {
    ideal.radical_member(f)
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rterm(n: i64, d: i64, exps: [u32; 4]) -> (Monomial, BigRational) {
    let mut e = [0; SLOTS];
    e[..4].copy_from_slice(&exps);
    (Monomial(e), rat(n, d))
}

/// The three symbols `p xi2^2 / 3 - xi1^2`, `q xi2^3 / 2 + xi1^3` and
/// `(4p^3 - 27q^2) xi1^2` vanishing on the cusp conormal.
pub fn cusp_symbols() -> [RationalPoly4; 3] {
    [
        Poly::from_terms([rterm(1, 3, [1, 0, 0, 2]), rterm(-1, 1, [0, 0, 2, 0])]),
        Poly::from_terms([rterm(1, 2, [0, 1, 0, 3]), rterm(1, 1, [0, 0, 3, 0])]),
        Poly::from_terms([rterm(4, 1, [3, 0, 2, 0]), rterm(-27, 1, [0, 2, 2, 0])]),
    ]
}

pub fn cusp_ideal() -> PolyIdeal<BigRational> {
    PolyIdeal::new(cusp_symbols().to_vec())
}

/// Whether each cusp symbol vanishes identically on `(3z^2, -2z^3, z l, l)`.
///
/// In the result `z` sits in the `p` slot and `l` in the `q` slot.
pub fn conormal_identity_check() -> bool {
    conormal_images().iter().all(Poly::is_zero)
}

/// The cusp symbols after the conormal substitution.
pub fn conormal_images() -> [RationalPoly4; 3] {
    let z = Poly::var(Variable::P);
    let l = Poly::var(Variable::Q);
    let images = [
        z.pow(2).scale(&rat(3, 1)),
        z.pow(3).scale(&rat(-2, 1)),
        &z * &l,
        l.clone(),
        Poly::var(Variable::Aux),
    ];
    cusp_symbols().map(|s| s.substitute(&images))
}

/// Membership facts for the brackets of the cusp symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BracketReport {
    pub p12_in_ideal: bool,
    pub p23_in_ideal: bool,
    pub p13_in_ideal: bool,
    pub p13_squared_in_ideal: bool,
    pub brackets_in_radical: bool,
}

pub fn bracket_report() -> BracketReport {
    let [p1, p2, p3] = cusp_symbols();
    let ideal = cusp_ideal();
    let (p12, p13, p23) = (poisson(&p1, &p2), poisson(&p1, &p3), poisson(&p2, &p3));
    let brackets_in_radical = [&p12, &p13, &p23].iter().all(|b| ideal.radical_member(b));
    BracketReport {
        p12_in_ideal: ideal.member(&p12),
        p23_in_ideal: ideal.member(&p23),
        p13_in_ideal: ideal.member(&p13),
        p13_squared_in_ideal: ideal.member(&p13.pow(2)),
        brackets_in_radical,
    }
}

impl fmt::Display for BracketReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "P12∈I: {}", self.p12_in_ideal)?;
        writeln!(f, "P23∈I: {}", self.p23_in_ideal)?;
        writeln!(f, "P13∈I: {}", self.p13_in_ideal)?;
        writeln!(f, "P13²∈I: {}", self.p13_squared_in_ideal)?;
        write!(f, "brackets∈√I: {}", self.brackets_in_radical)
    }
}
