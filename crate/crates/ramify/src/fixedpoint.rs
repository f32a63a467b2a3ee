//! Fixed-point iteration for `u_tt - u_x u_xx = 0` with a ramified Cauchy datum.
//!
//! The unknown is written `u = sum_k (1/k)(-p b_{k-1} + 3 b_{k-3}) z^k` over the
//! algebra `z^3 = p z + q`. One application of the map first solves a linearised
//! eikonal system for new `(p, q)`, then integrates the transport equations for the
//! `b_k`, losing three components of `b`.
//!
//! Bookkeeping: state series are stored one order above the working order `M` so
//! that the degree-`M` terms produced by integration survive; derivatives and all
//! products are taken at order `M`.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::{c_int, c_ratio, modulus, Real, C};
use crate::series::{Segment, SeriesError, TruncatedSeries2, Var};
use crate::zring::{divide_by_3z2_minus_p, Relation, ZElement, ZRingError};

type Ts<T> = TruncatedSeries2<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixedPointError {
    #[error("eikonal matrix M is singular at the origin (|det M(0,0)| = {det:e}); the datum needs c_2 != 0")]
    SingularMatrix { det: f64 },
    #[error("q_t vanishes at the origin")]
    DegenerateQt,
    #[error("need at least {need} b-components, have {have}")]
    TooFewComponents { need: usize, have: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<FixedPointError>,
    },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    ZRing(#[from] ZRingError),
}

/// Sign of `q_t(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootChoice {
    #[default]
    Plus,
    Minus,
}

/// Where the transport equations take their second `p` derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// `p_tt` in the `x`-derivative bracket and the full singular quotient sum,
    /// as in the reference computations.
    #[default]
    PaperFaithful,
    /// `p_xx` in that bracket and the exact quotient by `3z^2 - p`.
    Corrected,
}

/// The solution data `(p, q, b_0, ..., b_{N-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionData<T: Real> {
    pub p: Ts<T>,
    pub q: Ts<T>,
    pub b: Vec<Ts<T>>,
    pub root_choice: RootChoice,
}

impl<T: Real> SolutionData<T> {
    pub fn new(p: Ts<T>, q: Ts<T>, b: Vec<Ts<T>>) -> Self {
        let root_choice = if q.coeff(1, 0).re < T::zero() { RootChoice::Minus } else { RootChoice::Plus };
        Self { p, q, b, root_choice }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// All series re-truncated (or zero-padded) to `order`.
    pub fn with_order(&self, order: usize) -> Self {
        Self {
            p: self.p.with_order(order),
            q: self.q.with_order(order),
            b: self.b.iter().map(|s| s.with_order(order)).collect(),
            root_choice: self.root_choice,
        }
    }

    /// Named components in report order: `p`, `q`, `b0`, `b1`, ...
    pub fn components(&self) -> impl Iterator<Item = (Component, &Ts<T>)> {
        [(Component::P, &self.p), (Component::Q, &self.q)]
            .into_iter()
            .chain(self.b.iter().enumerate().map(|(k, s)| (Component::B(k), s)))
    }

    /// Checks `p(0,x) = 0`, `q(0,x) = x` and `b_k(0,x) = slices[k]` up to `tol`.
    pub fn initial_conditions_hold(&self, slices: &[Ts<T>], tol: T) -> bool {
        let order = self.p.order();
        let dev = |s: &Ts<T>, target: &Ts<T>| (&s.at_t0() - &target.with_order(order)).max_abs_coeff();
        let zero = Ts::zero(order);
        dev(&self.p, &zero) <= tol
            && dev(&self.q, &Ts::x(order)) <= tol
            && self.b.iter().enumerate().all(|(k, b)| dev(b, slices.get(k).unwrap_or(&zero)) <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    P,
    Q,
    B(usize),
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::P => f.write_str("p"),
            Component::Q => f.write_str("q"),
            Component::B(k) => write!(f, "b{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointConfig<T: Real> {
    /// Working truncation order `M`.
    pub order: usize,
    pub iterations: usize,
    pub x0: C<T>,
    pub segment: Segment,
    pub mode: Mode,
    /// Also evaluate the residual diagnostic after every iteration.
    pub track_residual: bool,
}

impl<T: Real> FixedPointConfig<T> {
    /// Defaults used in the reference runs: `M = I = 25`, `x0 = 0.1i`, `[0, 0.1]`.
    pub fn reference() -> Self {
        Self {
            order: 25,
            iterations: 25,
            x0: C::new(T::zero(), T::ratio(1, 10)),
            segment: Segment::default(),
            mode: Mode::PaperFaithful,
            track_residual: false,
        }
    }

    pub fn state_order(&self) -> usize {
        self.order + 1
    }

    pub fn validate(&self, data_length: usize) -> Result<(), FixedPointError> {
        if self.order < 2 {
            return Err(FixedPointError::Config(format!("order {} is below 2", self.order)));
        }
        let need = 3 * self.iterations + 5;
        if data_length < need {
            return Err(FixedPointError::Config(format!(
                "data length {data_length} is below 3*I + 5 = {need}"
            )));
        }
        Ok(())
    }
}

/// One row of the convergence report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow<T> {
    pub iteration: usize,
    pub component: Component,
    pub norm: T,
}

#[derive(Debug, Clone, Default)]
pub struct IterationReport<T> {
    pub rows: Vec<ReportRow<T>>,
    pub runtimes: Vec<Duration>,
    /// `(iteration, norm)` when residual tracking is on.
    pub residuals: Vec<(usize, T)>,
}

impl<T: Real> IterationReport<T> {
    pub fn norm(&self, iteration: usize, component: Component) -> Option<T> {
        self.rows
            .iter()
            .find(|r| r.iteration == iteration && r.component == component)
            .map(|r| r.norm)
    }

    pub fn residual(&self, iteration: usize) -> Option<T> {
        self.residuals.iter().find(|(i, _)| *i == iteration).map(|(_, r)| *r)
    }

    /// Components present at `iteration`.
    pub fn components(&self, iteration: usize) -> Vec<Component> {
        self.rows.iter().filter(|r| r.iteration == iteration).map(|r| r.component).collect()
    }
}

/// Derivatives of the solution data at one working order.
struct Frame<T: Real> {
    order: usize,
    zero: Ts<T>,
    p: Ts<T>,
    pt: Ts<T>,
    px: Ts<T>,
    ptt: Ts<T>,
    pxx: Ts<T>,
    qt: Ts<T>,
    qx: Ts<T>,
    qtt: Ts<T>,
    qxx: Ts<T>,
    b: Vec<Ts<T>>,
    bt: Vec<Ts<T>>,
    bx: Vec<Ts<T>>,
    btt: Vec<Ts<T>>,
    bxx: Vec<Ts<T>>,
    /// `(p/3)^l`, stopping once it truncates to zero.
    p3: Vec<Ts<T>>,
}

impl<T: Real> Frame<T> {
    fn new(d: &SolutionData<T>, order: usize) -> Self {
        let cut = |s: Ts<T>| s.with_order(order);
        let d1 = |s: &Ts<T>, v| cut(s.diff(v));
        let d2 = |s: &Ts<T>, v| cut(s.diff(v).diff(v));
        let map = |f: &(dyn Fn(&Ts<T>) -> Ts<T> + Sync)| d.b.par_iter().map(f).collect::<Vec<_>>();
        let p = cut(d.p.clone());
        let third = p.scale(c_ratio(1, 3));
        let mut p3 = vec![Ts::one(order)];
        for l in 1..d.b.len().max(2) {
            let next = &p3[l - 1] * &third;
            if next.is_zero() {
                break;
            }
            p3.push(next);
        }
        Self {
            order,
            zero: Ts::zero(order),
            pt: d1(&d.p, Var::T),
            px: d1(&d.p, Var::X),
            ptt: d2(&d.p, Var::T),
            pxx: d2(&d.p, Var::X),
            qt: d1(&d.q, Var::T),
            qx: d1(&d.q, Var::X),
            qtt: d2(&d.q, Var::T),
            qxx: d2(&d.q, Var::X),
            b: map(&|s| cut(s.clone())),
            bt: map(&|s| d1(s, Var::T)),
            bx: map(&|s| d1(s, Var::X)),
            btt: map(&|s| d2(s, Var::T)),
            bxx: map(&|s| d2(s, Var::X)),
            p3,
            p,
        }
    }

    fn n(&self) -> usize {
        self.b.len()
    }

    fn at<'a>(&'a self, v: &'a [Ts<T>], k: isize) -> &'a Ts<T> {
        usize::try_from(k).ok().and_then(|k| v.get(k)).unwrap_or(&self.zero)
    }

    fn pow3(&self, l: usize) -> Option<&Ts<T>> {
        self.p3.get(l)
    }

    /// `(1 - 1/j) p_x b_{j-1} + q_x b_j + (1/j)(-p b_{j-1,x} + 3 b_{j-3,x})`.
    fn first_bracket(&self, j: usize) -> Ts<T> {
        let ji = j as isize;
        let mut out = &self.qx * self.at(&self.b, ji);
        if j > 0 {
            let jj = j as i64;
            out.add_scaled(c_ratio(jj - 1, jj), &(&self.px * self.at(&self.b, ji - 1)));
            let mut tail = (&self.p * self.at(&self.bx, ji - 1)).scale(-C::<T>::one());
            tail.add_scaled(c_int(3), self.at(&self.bx, ji - 3));
            out.add_scaled(c_ratio(1, jj), &tail);
        }
        out
    }

    /// `(i-1) p_x^2 b_{i-1} + 2i p_x q_x b_i + (i+1) q_x^2 b_{i+1}`.
    fn second_bracket(&self, i: usize, px2: &Ts<T>, pxqx: &Ts<T>, qx2: &Ts<T>) -> Ts<T> {
        let ii = i as isize;
        let mut out = (qx2 * self.at(&self.b, ii + 1)).scale(c_int(ii as i64 + 1));
        if i > 0 {
            out.add_scaled(c_int(ii as i64 - 1), &(px2 * self.at(&self.b, ii - 1)));
            out.add_scaled(c_int(2 * ii as i64), &(pxqx * self.at(&self.b, ii)));
        }
        out
    }

    /// `x`-derivative bracket of the transport equation, with `second` standing in
    /// for the second `p` derivative.
    fn x_bracket(&self, i: usize, second: &Ts<T>) -> Ts<T> {
        let ii = i as isize;
        let mut out = &self.qxx * self.at(&self.b, ii);
        out.add_scaled(c_int(2), &(&self.qx * self.at(&self.bx, ii)));
        if i > 0 {
            let n = i as i64;
            out.add_scaled(c_ratio(2 * n - 2, n), &(&self.px * self.at(&self.bx, ii - 1)));
            out.add_scaled(c_ratio(n - 1, n), &(second * self.at(&self.b, ii - 1)));
            let mut tail = (&self.p * self.at(&self.bxx, ii - 1)).scale(-C::<T>::one());
            tail.add_scaled(c_int(3), self.at(&self.bxx, ii - 3));
            out.add_scaled(c_ratio(1, n), &tail);
        }
        out
    }

    /// `t`-derivative part of the `z^k` coefficient of `u_tt`, without the
    /// `2 q_t b_{k,t}` term.
    fn t_terms(&self, k: usize) -> Ts<T> {
        let ki = k as isize;
        let mut out = &self.qtt * self.at(&self.b, ki);
        if k > 0 {
            let n = k as i64;
            out.add_scaled(c_ratio(2 * n - 2, n), &(&self.pt * self.at(&self.bt, ki - 1)));
            out.add_scaled(c_ratio(n - 1, n), &(&self.ptt * self.at(&self.b, ki - 1)));
            let mut tail = (&self.p * self.at(&self.btt, ki - 1)).scale(-C::<T>::one());
            tail.add_scaled(c_int(3), self.at(&self.btt, ki - 3));
            out.add_scaled(c_ratio(1, n), &tail);
        }
        out
    }

    fn first_brackets(&self, count: usize) -> Vec<Ts<T>> {
        (0..count).into_par_iter().map(|j| self.first_bracket(j)).collect()
    }

    fn second_brackets(&self, count: usize) -> Vec<Ts<T>> {
        let px2 = &self.px * &self.px;
        let pxqx = &self.px * &self.qx;
        let qx2 = &self.qx * &self.qx;
        (0..count).into_par_iter().map(|i| self.second_bracket(i, &px2, &pxqx, &qx2)).collect()
    }

    /// `sum_{j=0}^{k} U_j S_{k-j}` for `k < count`: the `z^k` coefficient of `u_x u_xx`
    /// in front of `1/(3z^2 - p)`.
    fn convolution(&self, count: usize) -> Vec<Ts<T>> {
        let u = self.first_brackets(count);
        let s = self.second_brackets(count);
        convolve(&u, &s, count, self.order)
    }

    /// `(k-1) p_t^2 b_{k-1} + 2k b_k pt_hat q_t + (k+1) b_{k+1} qt_hat q_t`.
    fn singular_t_terms(&self, k: usize, pt2: &Ts<T>, pq: &Ts<T>, qq: &Ts<T>) -> Ts<T> {
        let ki = k as isize;
        let mut out = (qq * self.at(&self.b, ki + 1)).scale(c_int(ki as i64 + 1));
        if k > 0 {
            out.add_scaled(c_int(ki as i64 - 1), &(pt2 * self.at(&self.b, ki - 1)));
            out.add_scaled(c_int(2 * ki as i64), &(pq * self.at(&self.b, ki)));
        }
        out
    }
}

fn convolve<T: Real>(u: &[Ts<T>], s: &[Ts<T>], count: usize, order: usize) -> Vec<Ts<T>> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut acc = Ts::zero(order);
            for j in 0..=k {
                if let (Some(a), Some(b)) = (u.get(j), s.get(k - j)) {
                    acc += &(a * b);
                }
            }
            acc
        })
        .collect()
}

/// `B_k = sum_j U_j S_{k-j} - (k-1) p_t^2 b_{k-1}` for `k = 0..=k_max`, at `order`.
pub fn build_b<T: Real>(d: &SolutionData<T>, k_max: usize, order: usize) -> Vec<Ts<T>> {
    let f = Frame::new(d, order);
    let conv = f.convolution(k_max + 1);
    family_b(&f, conv)
}

fn family_b<T: Real>(f: &Frame<T>, conv: Vec<Ts<T>>) -> Vec<Ts<T>> {
    let pt2 = &f.pt * &f.pt;
    conv.into_par_iter()
        .enumerate()
        .map(|(k, mut c)| {
            if k > 0 {
                c.add_scaled(c_int(1 - k as i64), &(&pt2 * f.at(&f.b, k as isize - 1)));
            }
            c
        })
        .collect()
}

/// `sum_{l} (p/3)^l v_{start + 2l}` over the available entries.
fn even_sum<T: Real>(f: &Frame<T>, v: &[Ts<T>], start: usize) -> Ts<T> {
    let mut acc = Ts::zero(f.order);
    for (l, idx) in (start..v.len()).step_by(2).enumerate() {
        match f.pow3(l) {
            Some(w) => acc += &(w * &v[idx]),
            None => break,
        }
    }
    acc
}

/// The 2x2 eikonal matrix, row-major.
pub type Matrix2<T> = [[Ts<T>; 2]; 2];

pub fn assemble_m<T: Real>(d: &SolutionData<T>, order: usize) -> Matrix2<T> {
    matrix(&Frame::new(d, order))
}

fn matrix<T: Real>(f: &Frame<T>) -> Matrix2<T> {
    let n = f.n();
    let weighted = |start: usize, weight: &dyn Fn(usize) -> i64| {
        let mut acc = Ts::zero(f.order);
        for (l, idx) in (start..n).step_by(2).enumerate() {
            let Some(w) = f.pow3(l) else { break };
            let c = weight(l);
            if c != 0 {
                acc.add_scaled(c_int(c), &(w * &f.b[idx]));
            }
        }
        &f.qt * &acc
    };
    let m11 = weighted(0, &|l| 4 * l as i64);
    let m12 = weighted(1, &|l| 2 * l as i64 + 1);
    let m21 = m12.scale(c_int(2));
    let m22 = weighted(2, &|l| 2 * l as i64 + 2);
    [[m11, m12], [m21, m22]]
}

/// New `(p, q)` together with the time derivatives entering the transport step.
#[derive(Debug, Clone)]
pub struct EikonalSolution<T: Real> {
    pub p: Ts<T>,
    pub q: Ts<T>,
    pub pt: Ts<T>,
    pub qt: Ts<T>,
}

/// Solves the linearised eikonal system and integrates it from `p = 0`, `q = x`.
///
/// Input series are read at state order `order + 1`; the result is at that order.
pub fn eikonal_step<T: Real>(
    d: &SolutionData<T>,
    order: usize,
    mode: Mode,
) -> Result<EikonalSolution<T>, FixedPointError> {
    let f = Frame::new(d, order);
    let count = d.len().saturating_sub(1);
    let conv = f.convolution(count);
    eikonal(&f, &conv, mode)
}

fn eikonal_range(n: usize, mode: Mode) -> usize {
    let top = n.saturating_sub(2);
    match mode {
        Mode::PaperFaithful => top.div_ceil(2),
        Mode::Corrected => top,
    }
}

fn eikonal<T: Real>(f: &Frame<T>, conv: &[Ts<T>], mode: Mode) -> Result<EikonalSolution<T>, FixedPointError> {
    let k_max = eikonal_range(f.n(), mode);
    let fam = family_b(f, conv[..=k_max.min(conv.len() - 1)].to_vec());
    let rhs1 = even_sum(f, &fam, 0);
    let rhs2 = even_sum(f, &fam, 1);
    let [[m11, m12], [m21, m22]] = matrix(f);
    let det = &(&m11 * &m22) - &(&m12 * &m21);
    let det0 = modulus(det.coeff(0, 0));
    if det0 <= T::tolerance(0) {
        return Err(FixedPointError::SingularMatrix { det: det0.to_f64_lossy() });
    }
    let inv = det.reciprocal()?;
    let pt = &inv * &(&(&m22 * &rhs1) - &(&m12 * &rhs2));
    let qt = &inv * &(&(&m11 * &rhs2) - &(&m21 * &rhs1));
    let state = f.order + 1;
    let p = integrate_state(&pt, &Ts::zero(state))?;
    let q = integrate_state(&qt, &Ts::x(state))?;
    Ok(EikonalSolution { pt: p.diff(Var::T).with_order(f.order), qt: q.diff(Var::T).with_order(f.order), p, q })
}

/// Integrates an order-`M` right-hand side into a state series of order `M + 1`,
/// dropping the pure `t^M` term.
fn integrate_state<T: Real>(rhs: &Ts<T>, init: &Ts<T>) -> Result<Ts<T>, SeriesError> {
    let state = rhs.order() + 1;
    let mut out = rhs.with_order(state).integrate_t(&init.with_order(state))?;
    out.set(state - 1, 0, C::zero());
    Ok(out)
}

/// `A_k` for `k <= N - 2`.
pub fn build_a<T: Real>(d: &SolutionData<T>, pt_hat: &Ts<T>, qt_hat: &Ts<T>, order: usize) -> Vec<Ts<T>> {
    let f = Frame::new(d, order);
    let conv = f.convolution(d.len().saturating_sub(1));
    family_a(&f, &conv, pt_hat, qt_hat)
}

fn family_a<T: Real>(f: &Frame<T>, conv: &[Ts<T>], pt_hat: &Ts<T>, qt_hat: &Ts<T>) -> Vec<Ts<T>> {
    let pt2 = &f.pt * &f.pt;
    let pq = &pt_hat.with_order(f.order) * &f.qt;
    let qq = &qt_hat.with_order(f.order) * &f.qt;
    conv.par_iter()
        .enumerate()
        .map(|(k, c)| &f.singular_t_terms(k, &pt2, &pq, &qq) - c)
        .collect()
}

/// `C_k = scale * sum_l (p/3)^l A_{k+2+2l}` for `k <= N - 4`; `scale` is 1 in
/// `PaperFaithful` mode and 1/3 in corrected mode.
pub fn build_c<T: Real>(d: &SolutionData<T>, a: &[Ts<T>], order: usize, mode: Mode) -> Vec<Ts<T>> {
    family_c(&Frame::new(d, order), a, mode)
}

fn family_c<T: Real>(f: &Frame<T>, a: &[Ts<T>], mode: Mode) -> Vec<Ts<T>> {
    let count = a.len().saturating_sub(2);
    let scale = match mode {
        Mode::PaperFaithful => C::one(),
        Mode::Corrected => c_ratio(1, 3),
    };
    (0..count).into_par_iter().map(|k| even_sum(f, a, k + 2).scale(scale)).collect()
}

/// Integrates the transport equations: `b_hat_k` for `k <= N - 4`, starting from
/// `slices[k]` at `t = 0`.
pub fn b_update<T: Real>(
    d: &SolutionData<T>,
    c: &[Ts<T>],
    slices: &[Ts<T>],
    order: usize,
    mode: Mode,
) -> Result<Vec<Ts<T>>, FixedPointError> {
    let f = Frame::new(d, order);
    let u = f.first_brackets(c.len());
    transport(&f, &u, c, slices, mode)
}

fn transport<T: Real>(
    f: &Frame<T>,
    u: &[Ts<T>],
    c: &[Ts<T>],
    slices: &[Ts<T>],
    mode: Mode,
) -> Result<Vec<Ts<T>>, FixedPointError> {
    if modulus(f.qt.coeff(0, 0)) <= T::tolerance(0) {
        return Err(FixedPointError::DegenerateQt);
    }
    let half_inv = f.qt.scale(c_int(2)).reciprocal()?;
    let second = match mode {
        Mode::PaperFaithful => &f.ptt,
        Mode::Corrected => &f.pxx,
    };
    let r: Vec<Ts<T>> = (0..c.len()).into_par_iter().map(|i| f.x_bracket(i, second)).collect();
    let ur = convolve(u, &r, c.len(), f.order);
    let state = f.order + 1;
    let zero = Ts::zero(state);
    (0..c.len())
        .into_par_iter()
        .map(|k| {
            let mut rhs = &ur[k] - &c[k];
            rhs -= &f.t_terms(k);
            let rhs = &half_inv * &rhs;
            Ok(integrate_state(&rhs, slices.get(k).unwrap_or(&zero))?)
        })
        .collect()
}

/// One application of the map: eikonal step, then the transport step.
pub fn map_f<T: Real>(
    d: &SolutionData<T>,
    slices: &[Ts<T>],
    order: usize,
    mode: Mode,
) -> Result<SolutionData<T>, FixedPointError> {
    let n = d.len();
    if n < 5 {
        return Err(FixedPointError::TooFewComponents { need: 5, have: n });
    }
    let d = d.with_order(order + 1);
    let f = Frame::new(&d, order);
    let u = f.first_brackets(n - 1);
    let s = f.second_brackets(n - 1);
    let conv = convolve(&u, &s, n - 1, order);
    let eik = eikonal(&f, &conv, mode)?;
    let a = family_a(&f, &conv, &eik.pt, &eik.qt);
    let c = family_c(&f, &a, mode);
    let b = transport(&f, &u, &c, slices, mode)?;
    Ok(SolutionData { p: eik.p, q: eik.q, b, root_choice: d.root_choice })
}

/// Output of [`iterate`].
#[derive(Debug, Clone)]
pub struct Iteration<T: Real> {
    pub solution: SolutionData<T>,
    pub report: IterationReport<T>,
}

/// Applies [`map_f`] `cfg.iterations` times from `d0`, recording the segment norm of
/// each component's change.
pub fn iterate<T: Real>(
    d0: &SolutionData<T>,
    slices: &[Ts<T>],
    cfg: &FixedPointConfig<T>,
) -> Result<Iteration<T>, FixedPointError> {
    iterate_with(d0, slices, cfg, |_, _| {})
}

/// As [`iterate`], calling `observe(i, state)` after iteration `i`.
pub fn iterate_with<T: Real>(
    d0: &SolutionData<T>,
    slices: &[Ts<T>],
    cfg: &FixedPointConfig<T>,
    mut observe: impl FnMut(usize, &SolutionData<T>),
) -> Result<Iteration<T>, FixedPointError> {
    cfg.validate(d0.len())?;
    let state_order = cfg.state_order();
    let slices: Vec<Ts<T>> = slices.iter().map(|s| s.with_order(state_order)).collect();
    let mut current = d0.with_order(state_order);
    let mut report = IterationReport { rows: Vec::new(), runtimes: Vec::new(), residuals: Vec::new() };
    for i in 1..=cfg.iterations {
        let wrap = |e: FixedPointError| FixedPointError::Iteration { iteration: i, source: Box::new(e) };
        let start = Instant::now();
        let next = map_f(&current, &slices, cfg.order, cfg.mode).map_err(wrap)?;
        report.runtimes.push(start.elapsed());
        for ((component, new), (_, old)) in next.components().zip(current.components()) {
            let norm = (new - old).sup_norm(cfg.x0, &cfg.segment);
            report.rows.push(ReportRow { iteration: i, component, norm });
        }
        if cfg.track_residual {
            report.residuals.push((i, residual(&next, cfg.x0, &cfg.segment).norm));
        }
        observe(i, &next);
        current = next;
    }
    Ok(Iteration { solution: current, report })
}

/// `u = sum_k (1/k)(-p b_{k-1} + 3 b_{k-3}) z^k` over the relation `(p, q)` of `d`.
pub fn reconstruct_u<T: Real>(d: &SolutionData<T>) -> ZElement<T> {
    let order = d.p.order();
    let relation = Arc::new(Relation::new(d.p.clone(), d.q.with_order(order)).expect("same order"));
    let b: Vec<Ts<T>> = d.b.iter().map(|s| s.with_order(order)).collect();
    ZElement::new(b, relation).expect("same order").primitive_q_raw()
}

/// Split of `u_tt - u_x u_xx` for the reconstructed `u`.
#[derive(Debug, Clone)]
pub struct Residual<T: Real> {
    /// Ring part, with the quotient of the singular part by `3z^2 - p` folded in.
    pub regular: ZElement<T>,
    /// Coefficients in front of `1/(3z^2 - p)`.
    pub singular: ZElement<T>,
    /// Remainder of `singular` modulo `3z^2 - p`: the eikonal conditions.
    pub remainder: [Ts<T>; 2],
    pub norm: T,
}

/// Residual of the equation for the solution encoded by `d`, measured by the segment
/// norm at `x0` of every regular coefficient that the transport step enforces and of
/// the eikonal remainder.
///
/// Products run two orders below the state order, where second derivatives are exact.
pub fn residual<T: Real>(d: &SolutionData<T>, x0: C<T>, segment: &Segment) -> Residual<T> {
    let order = d.p.order().saturating_sub(2).max(1);
    let f = Frame::new(d, order);
    let n = f.n();
    let relation = Arc::new(Relation::new(f.p.clone(), d.q.with_order(order)).expect("same order"));
    let count = n.saturating_sub(1);
    let conv = f.convolution(count);
    let pt2 = &f.pt * &f.pt;
    let pq = &f.pt * &f.qt;
    let qq = &f.qt * &f.qt;
    let singular: Vec<Ts<T>> = (0..count)
        .into_par_iter()
        .map(|k| &f.singular_t_terms(k, &pt2, &pq, &qq) - &conv[k])
        .collect();
    let (quot, remainder) = divide_by_3z2_minus_p(&singular, &f.p);
    let enforced = n.saturating_sub(3);
    let u = f.first_brackets(enforced);
    let r: Vec<Ts<T>> = (0..enforced).into_par_iter().map(|i| f.x_bracket(i, &f.pxx)).collect();
    let ur = convolve(&u, &r, enforced, order);
    let regular: Vec<Ts<T>> = (0..enforced)
        .into_par_iter()
        .map(|k| {
            let mut out = f.t_terms(k);
            out.add_scaled(c_int(2), &(&f.qt * f.at(&f.bt, k as isize)));
            out -= &ur[k];
            if let Some(qk) = quot.get(k) {
                out += qk;
            }
            out
        })
        .collect();
    let norm = regular
        .iter()
        .chain(remainder.iter())
        .map(|s| s.sup_norm(x0, segment))
        .fold(T::zero(), T::max);
    Residual {
        regular: ZElement::new(regular, Arc::clone(&relation)).expect("same order"),
        singular: ZElement::new(singular, relation).expect("same order"),
        remainder,
        norm,
    }
}
