//! The inviscid Burgers equation `u_t = u u_x` and the cusp `z^3 = p z + q`.
//!
//! * a Cauchy-Kovalevskaya series solver for the system fixing `(a, p, q)` in the
//!   ansatz `u = a + z`,
//! * the contact flow of the datum `x^{1/3}`,
//! * numeric continuation of the three roots along loops avoiding the
//!   discriminant `4p^3 - 27q^2`,
//! * an exact shock example with datum `x^{1/2}`,
//! * eigen-data of the companion system `lambda^m = v_1`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::scalar::{c_div, c_int, c_ratio, c_re, c_to_f64, modulus, Real, C};
use crate::series::{TruncatedSeries2, Var};

type Ts<T> = TruncatedSeries2<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BurgersError {
    #[error("initial value a0 must depend on x only")]
    InitDependsOnT,
    #[error("x must be nonzero")]
    ZeroX,
    #[error("flow time s = {s} hits the singular time 3x^(2/3)")]
    SingularTime { s: f64 },
    #[error("sample {index} lies on the discriminant (|4p^3 - 27q^2| = {value:e})")]
    OnDiscriminant { index: usize, value: f64 },
    #[error("path needs at least two samples")]
    EmptyPath,
    #[error("path is not closed")]
    NotClosed,
    #[error("starting value is not a root (|f| = {residual:e})")]
    NotARoot { residual: f64 },
    #[error("Newton continuation diverged on segment {segment}; refine the path")]
    Divergence { segment: usize },
    #[error("continued roots do not permute the base roots")]
    NotAPermutation,
    #[error("need 0 < x0 < x1")]
    Ordering,
    #[error("{0} is not the square of a rational")]
    NotASquare(BigRational),
    #[error("v1 must be nonzero")]
    ZeroSpeed,
    #[error("m must be at least 1")]
    ZeroDegree,
}

/// Series solution of `q_t = a q_x + p p_x/3`, `p_t = a p_x + q_x`, `a_t = p_x/3`
/// with `a(0,x) = a0(x)`, `p(0,x) = 0`, `q(0,x) = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CkState<T: Real> {
    pub a: Ts<T>,
    pub p: Ts<T>,
    pub q: Ts<T>,
}

/// Solves the system by matching powers of `t`: the `t^{l+1}` coefficients follow
/// from the right-hand sides restricted to `t^l`.
pub fn ck_solve<T: Real>(a0: &Ts<T>, order: usize) -> Result<CkState<T>, BurgersError> {
    if !a0.is_x_only() {
        return Err(BurgersError::InitDependsOnT);
    }
    let mut a = a0.with_order(order);
    let mut p = Ts::zero(order);
    let mut q = Ts::x(order);
    let third = c_ratio::<T>(1, 3);
    for l in 0..order.saturating_sub(1) {
        let (px, qx) = (p.diff(Var::X), q.diff(Var::X));
        let rq = &(&a * &qx) + &(&p * &px).scale(third);
        let rp = &(&a * &px) + &qx;
        let ra = px.scale(third);
        let step = c_ratio::<T>(1, l as i64 + 1);
        for m in 0..order - l - 1 {
            q.set(l + 1, m, rq.coeff(l, m) * step);
            p.set(l + 1, m, rp.coeff(l, m) * step);
            a.set(l + 1, m, ra.coeff(l, m) * step);
        }
    }
    Ok(CkState { a, p, q })
}

/// Largest coefficient of the three equations of the system, below the top degree.
pub fn ck_equations_residual<T: Real>(s: &CkState<T>) -> T {
    let o = s.a.order().saturating_sub(1);
    let cut = |v: Ts<T>| v.with_order(o);
    let (a, p) = (cut(s.a.clone()), cut(s.p.clone()));
    let (at, pt, qt) = (cut(s.a.diff(Var::T)), cut(s.p.diff(Var::T)), cut(s.q.diff(Var::T)));
    let (px, qx) = (cut(s.p.diff(Var::X)), cut(s.q.diff(Var::X)));
    let third = c_ratio::<T>(1, 3);
    let eq_q = &qt - &(&(&a * &qx) + &(&p * &px).scale(third));
    let eq_p = &pt - &(&(&a * &px) + &qx);
    let eq_a = &at - &px.scale(third);
    [eq_q, eq_p, eq_a].iter().map(Ts::max_abs_coeff).fold(T::zero(), T::max)
}

/// Coefficients of `z^0 .. z^3` left when `u = a + z` is substituted into
/// `u_t = u u_x` and `z` is eliminated; returns the largest series coefficient.
pub fn burgers_residual<T: Real>(s: &CkState<T>) -> T {
    let o = s.a.order().saturating_sub(1);
    let cut = |v: Ts<T>| v.with_order(o);
    let (a, p) = (cut(s.a.clone()), cut(s.p.clone()));
    let (at, pt, qt) = (cut(s.a.diff(Var::T)), cut(s.p.diff(Var::T)), cut(s.q.diff(Var::T)));
    let (ax, px, qx) = (cut(s.a.diff(Var::X)), cut(s.p.diff(Var::X)), cut(s.q.diff(Var::X)));
    let third = c_ratio::<T>(1, 3);
    let z0 = &(&(&qt - &(&p * &at)) + &(&a * &(&p * &ax))) - &(&a * &qx);
    let z1 = &(&(&pt + &(&p * &ax)) - &(&a * &px)) - &qx;
    let z2 = &(&at - &(&a * &ax)) - &px.scale(third);
    let z3 = ax.scale(c_int(3));
    [z0, z1, z2, z3].iter().map(Ts::max_abs_coeff).fold(T::zero(), T::max)
}

/// `4p^3 - 27q^2`.
pub fn discriminant<T: Real>(p: C<T>, q: C<T>) -> C<T> {
    p * p * p * c_int(4) - q * q * c_int(27)
}

/// Principal `m`-th root, polished to full precision.
pub fn principal_root<T: Real>(x: C<T>, m: u32) -> C<T> {
    let guess = c_to_f64(x).powf(1.0 / m as f64);
    polish_root(x, m, Complex::new(T::from_f64_lossy(guess.re), T::from_f64_lossy(guess.im)))
}

/// Newton iteration on `w^m = x` from `w`.
fn polish_root<T: Real>(x: C<T>, m: u32, mut w: C<T>) -> C<T> {
    let mi = c_int::<T>(m as i64);
    for _ in 0..6 {
        let wm1 = w.powu(m - 1);
        w = w - c_div(wm1 * w - x, mi * wm1);
    }
    w
}

/// A point `(t, y, u, tau, xi)` of the contact flow of the datum `x^{1/3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint<T: Real> {
    pub t: C<T>,
    pub y: C<T>,
    pub u: C<T>,
    pub tau: C<T>,
    pub xi: C<T>,
}

/// Flow for time `s` from the 1-jet of `x^{1/3}` at `x`.
pub fn contact_flow<T: Real>(x: C<T>, s: T) -> Result<ContactPoint<T>, BurgersError> {
    if x.is_zero() {
        return Err(BurgersError::ZeroX);
    }
    let u = principal_root(x, 3);
    let s = c_re(s);
    let den = u * u * c_int(3) - s;
    if modulus(den) <= T::tolerance(0) * (T::one() + modulus(s)) {
        return Err(BurgersError::SingularTime { s: s.re.to_f64_lossy() });
    }
    let xi = c_div(C::one(), den);
    Ok(ContactPoint { t: s, y: x - u * s, u, tau: u * xi, xi })
}

/// Sampled path `s -> (p(s), q(s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathInPQ<T: Real> {
    points: Vec<(C<T>, C<T>)>,
    closed: bool,
}

/// Samples closer than this to the discriminant are rejected.
pub const DISCRIMINANT_THRESHOLD: f64 = 1e-8;

impl<T: Real> PathInPQ<T> {
    pub fn new(points: Vec<(C<T>, C<T>)>) -> Result<Self, BurgersError> {
        if points.len() < 2 {
            return Err(BurgersError::EmptyPath);
        }
        for (index, (p, q)) in points.iter().enumerate() {
            let value = modulus(discriminant(*p, *q)).to_f64_lossy();
            if value < DISCRIMINANT_THRESHOLD {
                return Err(BurgersError::OnDiscriminant { index, value });
            }
        }
        let (first, last) = (points[0], points[points.len() - 1]);
        let closed = modulus(first.0 - last.0) + modulus(first.1 - last.1) <= T::tolerance(0);
        Ok(Self { points, closed })
    }

    /// The loop staying at one point.
    pub fn constant(p: C<T>, q: C<T>, samples: usize) -> Result<Self, BurgersError> {
        Self::new(vec![(p, q); samples.max(2)])
    }

    /// Circle `q = center + radius e^{i theta}` at fixed `p`, starting at `theta0`.
    pub fn circle_q(p: C<T>, center: C<T>, radius: T, theta0: f64, samples: usize) -> Result<Self, BurgersError> {
        let n = samples.max(3);
        let mut points: Vec<(C<T>, C<T>)> = (0..n)
            .map(|i| {
                let theta = T::from_f64_lossy(theta0) + T::from_int(2 * i as i64) * T::PI() / T::from_int(n as i64);
                (p, center + Complex::new(theta.cos(), theta.sin()) * radius)
            })
            .collect();
        points.push(points[0]);
        Self::new(points)
    }

    pub fn points(&self) -> &[(C<T>, C<T>)] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn start(&self) -> (C<T>, C<T>) {
        self.points[0]
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points, closed: self.closed }
    }

    /// `self` followed by `other`; `other` must start where `self` ends.
    pub fn then(&self, other: &Self) -> Self {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points[1..]);
        let closed = {
            let (f, l) = (points[0], points[points.len() - 1]);
            modulus(f.0 - l.0) + modulus(f.1 - l.1) <= T::tolerance(0)
        };
        Self { points, closed }
    }

    /// Same loop with every segment split into `k` pieces.
    pub fn refined(&self, k: usize) -> Self {
        let k = k.max(1);
        let mut points = vec![self.points[0]];
        for w in self.points.windows(2) {
            for j in 1..=k {
                let s = c_ratio::<T>(j as i64, k as i64);
                points.push((w[0].0 + (w[1].0 - w[0].0) * s, w[0].1 + (w[1].1 - w[0].1) * s));
            }
        }
        Self { points, closed: self.closed }
    }
}

fn cubic<T: Real>(p: C<T>, q: C<T>, z: C<T>) -> C<T> {
    z * z * z - p * z - q
}

/// Newton on `z^3 - p z - q` from `z`, at most 8 steps.
fn newton<T: Real>(p: C<T>, q: C<T>, mut z: C<T>) -> Option<C<T>> {
    let tol = T::tolerance(2) * (T::one() + modulus(z));
    for _ in 0..8 {
        let d = z * z * c_int(3) - p;
        if d.is_zero() {
            return None;
        }
        let step = c_div(cubic(p, q, z), d);
        z = z - step;
        if modulus(step) <= tol {
            return Some(z);
        }
    }
    None
}

/// Smallest distance from `z` to the other two roots at `(p, q)`.
fn separation<T: Real>(p: C<T>, z: C<T>) -> f64 {
    let (p, z) = (c_to_f64(p), c_to_f64(z));
    let disc = (p * 4.0 - z * z * 3.0).sqrt();
    let others = [(-z + disc) / 2.0, (-z - disc) / 2.0];
    others.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Follows the root starting at `z_start` along the path.
pub fn continue_root<T: Real>(path: &PathInPQ<T>, z_start: C<T>) -> Result<C<T>, BurgersError> {
    let (p0, q0) = path.start();
    let residual = modulus(cubic(p0, q0, z_start));
    if residual > T::tolerance(5) * (T::one() + modulus(z_start).powi(3)) {
        return Err(BurgersError::NotARoot { residual: residual.to_f64_lossy() });
    }
    let mut z = newton(p0, q0, z_start).unwrap_or(z_start);
    for (segment, w) in path.points.windows(2).enumerate() {
        z = continue_segment(w[0], w[1], z, 0).ok_or(BurgersError::Divergence { segment })?;
    }
    Ok(z)
}

fn continue_segment<T: Real>(a: (C<T>, C<T>), b: (C<T>, C<T>), z: C<T>, depth: u32) -> Option<C<T>> {
    // tangent predictor: dz = (z dp + dq) / (3z^2 - p)
    let d = z * z * c_int(3) - a.0;
    let dz = c_div(z * (b.0 - a.0) + (b.1 - a.1), d);
    let guard = 0.25 * separation(a.0, z);
    let accepted = newton(b.0, b.1, z + dz).filter(|w| modulus(*w - z).to_f64_lossy() < guard);
    match accepted {
        Some(w) => Some(w),
        None if depth < 40 => {
            let half = c_ratio::<T>(1, 2);
            let mid = (a.0 + (b.0 - a.0) * half, a.1 + (b.1 - a.1) * half);
            let zm = continue_segment(a, mid, z, depth + 1)?;
            continue_segment(mid, b, zm, depth + 1)
        }
        None => None,
    }
}

/// The three roots at `(p, q)` in lexicographic `(re, im)` order.
pub fn sorted_roots<T: Real>(p: C<T>, q: C<T>) -> [C<T>; 3] {
    let mut roots = crate::zring::cubic_roots(p, q).map(|z| newton(p, q, z).unwrap_or(z));
    roots.sort_by(|a, b| {
        let (a, b) = (c_to_f64(*a), c_to_f64(*b));
        a.re.partial_cmp(&b.re).unwrap_or(Ordering::Equal).then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
    });
    roots
}

/// Permutation of the root labels `0, 1, 2`: root `i` is carried to root `self.0[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Permutation(pub [usize; 3]);

impl Permutation {
    pub const IDENTITY: Self = Self([0, 1, 2]);

    /// `self` first, then `other`.
    pub fn then(self, other: Self) -> Self {
        Self(self.0.map(|i| other.0[i]))
    }

    pub fn inverse(self) -> Self {
        let mut out = [0; 3];
        for (i, &j) in self.0.iter().enumerate() {
            out[j] = i;
        }
        Self(out)
    }

    pub fn fixed_points(self) -> usize {
        (0..3).filter(|&i| self.0[i] == i).count()
    }

    pub fn is_transposition(self) -> bool {
        self.fixed_points() == 1
    }
}

/// Monodromy of a closed path acting on the base-point roots.
pub fn monodromy<T: Real>(path: &PathInPQ<T>) -> Result<Permutation, BurgersError> {
    if !path.is_closed() {
        return Err(BurgersError::NotClosed);
    }
    let (p0, q0) = path.start();
    let base = sorted_roots(p0, q0);
    let mut perm = [usize::MAX; 3];
    for (i, z) in base.iter().enumerate() {
        let end = continue_root(path, *z)?;
        let (j, _) = base
            .iter()
            .enumerate()
            .map(|(j, w)| (j, modulus(*w - end)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
            .expect("three roots");
        perm[i] = j;
    }
    let mut seen = [false; 3];
    for &j in &perm {
        if seen[j] {
            return Err(BurgersError::NotAPermutation);
        }
        seen[j] = true;
    }
    Ok(Permutation(perm))
}

/// Shock data for `u_t = u u_x`, `u(0,x) = x^{1/2}`: the characteristic from `x0` meets
/// the branch locus at `t0` and the characteristic from `x1` at `t_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockTimes {
    pub t0: BigRational,
    pub t_star: BigRational,
}

/// Exact square root of a rational square.
pub fn rational_sqrt(x: &BigRational) -> Result<BigRational, BurgersError> {
    let not_square = || BurgersError::NotASquare(x.clone());
    if x.is_negative() {
        return Err(not_square());
    }
    let root = |n: &BigInt| {
        let r = n.sqrt();
        (&r * &r == *n).then_some(r)
    };
    match (root(x.numer()), root(x.denom())) {
        (Some(n), Some(d)) => Ok(BigRational::new(n, d)),
        _ => Err(not_square()),
    }
}

pub fn shock_times(x0: &BigRational, x1: &BigRational) -> Result<ShockTimes, BurgersError> {
    if !(x0.is_positive() && x0 < x1) {
        return Err(BurgersError::Ordering);
    }
    let (r0, r1) = (rational_sqrt(x0)?, rational_sqrt(x1)?);
    Ok(ShockTimes { t0: &r0 + &r0, t_star: r0 + r1 })
}

/// `delta = y + t^2/4` along the characteristic `y = x0 - x0^{1/2} t`.
pub fn branch_delta(t: &BigRational, x0: &BigRational) -> Result<BigRational, BurgersError> {
    let y = x0 - rational_sqrt(x0)? * t;
    Ok(y + t * t / BigRational::from_integer(4.into()))
}

/// The two roots `t/2 +- sqrt((t/2 - x0^{1/2})^2)` on the real characteristic of `x0`.
pub fn branch_values(t: &BigRational, x0: &BigRational) -> Result<(BigRational, BigRational), BurgersError> {
    let half = t / BigRational::from_integer(2.into());
    let width = (&half - rational_sqrt(x0)?).abs();
    Ok((&half + &width, half - width))
}

/// Floating point counterpart of [`shock_times`].
pub fn shock_times_float<T: Real>(x0: T, x1: T) -> Result<(T, T), BurgersError> {
    if !(x0 > T::zero() && x0 < x1) {
        return Err(BurgersError::Ordering);
    }
    let (r0, r1) = (x0.sqrt(), x1.sqrt());
    Ok((r0 + r0, r0 + r1))
}

/// Eigen-data of the companion system with speeds `lambda^m = v1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharField<T: Real> {
    pub lambda: C<T>,
    /// `(1, lambda, ..., lambda^{m-1})`.
    pub omega: Vec<C<T>>,
    /// `<d lambda, omega> = lambda / (m v1)`; nonzero means genuinely nonlinear.
    pub g: C<T>,
    /// `max |A omega - lambda omega|` for the companion matrix `A`.
    pub companion_residual: T,
}

pub fn characteristic_fields<T: Real>(m: u32, v1: C<T>) -> Result<Vec<CharField<T>>, BurgersError> {
    if m == 0 {
        return Err(BurgersError::ZeroDegree);
    }
    if v1.is_zero() {
        return Err(BurgersError::ZeroSpeed);
    }
    let base = c_to_f64(v1).powf(1.0 / m as f64);
    let mv1 = v1 * c_int(m as i64);
    Ok((0..m)
        .map(|k| {
            let turn = Complex::<f64>::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let g = base * turn;
            let lambda = polish_root(v1, m, Complex::new(T::from_f64_lossy(g.re), T::from_f64_lossy(g.im)));
            let omega: Vec<C<T>> = (0..m).map(|j| lambda.powu(j)).collect();
            let companion_residual = (0..m as usize)
                .map(|i| {
                    let row = if i + 1 < m as usize { omega[i + 1] } else { v1 * omega[0] };
                    modulus(row - lambda * omega[i])
                })
                .fold(T::zero(), T::max);
            CharField { lambda, omega, g: c_div(lambda, mv1), companion_residual }
        })
        .collect())
}
