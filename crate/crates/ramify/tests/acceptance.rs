//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use ramify::burgers::{self, PathInPQ, Permutation};
use ramify::fixedpoint::{self, Component, FixedPointConfig, Iteration, Mode, SolutionData};
use ramify::ideals;
use ramify::scalar::{c_f64, c_int, c_ratio, modulus, C};
use ramify::zring::{Relation, ZElement};
use ramify::{Real, Series, TwoFloat};

type F = TwoFloat;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Initial guess with `p = t/2`, `q = t + x` and the listed leading `b_k`.
fn initial(order: usize, n: usize, leading: Vec<Series>) -> (SolutionData<F>, Vec<Series>) {
    let t = Series::t(order);
    let x = Series::x(order);
    let mut b = vec![Series::zero(order); n];
    for (k, s) in leading.into_iter().enumerate() {
        b[k] = s;
    }
    let slices = b.iter().map(Series::at_t0).collect();
    (SolutionData::new(t.scale(c_ratio(1, 2)), &t + &x, b), slices)
}

struct Case {
    name: &'static str,
    order: usize,
    /// Components shown in the convergence figures.
    tracked: Vec<Component>,
    data: fn(usize) -> Vec<Series>,
}

fn cst(order: usize, n: i64, d: i64) -> Series {
    Series::constant(order, c_ratio(n, d))
}

fn data0(o: usize) -> Vec<Series> {
    vec![Series::one(o), Series::one(o)]
}

fn data1(o: usize) -> Vec<Series> {
    let t = Series::t(o);
    vec![&Series::one(o) + &t, &Series::one(o) - &t]
}

fn data2(o: usize) -> Vec<Series> {
    let b2 = Series::x(o).scale(c_ratio(1, 10));
    vec![Series::one(o), Series::one(o), b2.clone(), b2]
}

fn data5(o: usize) -> Vec<Series> {
    vec![Series::one(o), Series::one(o), cst(o, 1, 10)]
}

fn data6(o: usize) -> Vec<Series> {
    let t = Series::t(o);
    vec![
        Series::one(o),
        &Series::one(o) - &t.scale(c_ratio(1, 10)),
        &cst(o, 1, 10) + &(&t * &t).scale(c_ratio(1, 5)),
    ]
}

fn tracked(b: usize) -> Vec<Component> {
    [Component::P, Component::Q].into_iter().chain((0..b).map(Component::B)).collect()
}

struct Run {
    out: Iteration<F>,
    elapsed: Duration,
}

fn run(case: &Case, mode: Mode, track_residual: bool) -> Run {
    let mut cfg = FixedPointConfig::<F>::reference();
    cfg.order = case.order;
    cfg.mode = mode;
    cfg.track_residual = track_residual;
    let n = 3 * cfg.iterations + 5;
    let (d0, slices) = initial(cfg.state_order(), n, (case.data)(cfg.state_order()));
    let start = Instant::now();
    let out = fixedpoint::iterate(&d0, &slices, &cfg).expect("iteration succeeds");
    Run { out, elapsed: start.elapsed() }
}

fn re(z: C<F>) -> f64 {
    z.re.to_f64_lossy()
}

/// Checks `(t-power, x-power, expected)` triples within `5e-4`.
fn coefficients(s: &Series, expected: &[(usize, usize, f64)]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(l, m, want) in expected {
        let got = s.coeff(l, m);
        let good = (re(got) - want).abs() <= 5e-4 && got.im.to_f64_lossy().abs() <= 5e-4;
        ok &= good;
        parts.push(format!("[t^{l}x^{m}] {:.5}", re(got)));
    }
    (ok, parts.join(" "))
}

fn check_reproduction(r: &Run, p: &[(usize, usize, f64)], q: &[(usize, usize, f64)]) -> Outcome {
    let s = &r.out.solution;
    let (okp, dp) = coefficients(&s.p, p);
    let (okq, dq) = coefficients(&s.q, q);
    outcome(okp && okq, format!("p: {dp}; q: {dq}; {:.1?}", r.elapsed))
}

fn convergence(name: &str, r: &Run, comps: &[Component], iterations: usize) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &c in comps {
        let first = r.out.report.norm(1, c).expect("row").to_f64_lossy();
        let last = r.out.report.norm(iterations, c).expect("row").to_f64_lossy();
        ok &= last <= 1e-3 * first;
        parts.push(format!("{c} {first:.1e}->{last:.1e}"));
    }
    (ok, format!("{name}: {}", parts.join(", ")))
}

fn agreement(a: &Run, b: &Run, comps: &[Component]) -> (bool, f64) {
    let cfg = FixedPointConfig::<F>::reference();
    let (sa, sb) = (&a.out.solution, &b.out.solution);
    let worst = comps
        .iter()
        .map(|&c| {
            let pick = |s: &SolutionData<F>| match c {
                Component::P => s.p.clone(),
                Component::Q => s.q.clone(),
                Component::B(k) => s.b[k].clone(),
            };
            (&pick(sa) - &pick(sb)).sup_norm(cfg.x0, &cfg.segment).to_f64_lossy()
        })
        .fold(0.0, f64::max);
    (worst <= 1e-3, worst)
}

fn criterion_6() -> Outcome {
    let cfg = FixedPointConfig::<F>::reference();
    let (d0, _) = initial(cfg.state_order(), 3 * cfg.iterations + 5, data0(cfg.state_order()));
    match fixedpoint::eikonal_step(&d0, cfg.order, cfg.mode) {
        Ok(e) => {
            let (pt, qt) = (e.pt.coeff(0, 0), e.qt.coeff(0, 0));
            let ep = modulus(pt - c_ratio(1, 2)).to_f64_lossy();
            let eq = modulus(qt - c_int(1)).to_f64_lossy();
            outcome(ep <= 1e-20 && eq <= 1e-20, format!("|pt - 1/2| = {ep:.1e}, |qt - 1| = {eq:.1e}"))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_7(r: &Run, corrected: &Run) -> Outcome {
    let at = |r: &Run, i| r.out.report.residual(i).expect("tracked").to_f64_lossy();
    let (r5, r25) = (at(r, 5), at(r, 25));
    outcome(
        r25 < r5,
        format!(
            "residual it5 {r5:.3e}, it25 {r25:.3e} (corrected mode: {:.3e} -> {:.3e})",
            at(corrected, 5),
            at(corrected, 25)
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let order = 25;
    let s = burgers::ck_solve(&Series::zero(order), order).expect("constant datum");
    let spurious = [
        (&s.p - &Series::t(order)).max_abs_coeff(),
        (&s.q - &Series::x(order)).max_abs_coeff(),
        s.a.max_abs_coeff(),
    ]
    .into_iter()
    .fold(F::zero(), F::max)
    .to_f64_lossy();
    let res = burgers::burgers_residual(&s).to_f64_lossy();
    let elapsed = start.elapsed();
    outcome(
        spurious <= 1e-20 && res <= 1e-20 && elapsed < Duration::from_secs(1),
        format!("spurious {spurious:.1e}, residual {res:.1e}, {elapsed:.1?}"),
    )
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    for (x0, x1, r0, r1) in [((1, 4), (1, 1), (1, 2), (1, 1)), ((4, 9), (25, 16), (2, 3), (5, 4)), ((1, 1), (4, 1), (1, 1), (2, 1))] {
        let (x0, x1) = (rat(x0.0, x0.1), rat(x1.0, x1.1));
        let (r0, r1) = (rat(r0.0, r0.1), rat(r1.0, r1.1));
        let st = burgers::shock_times(&x0, &x1).expect("squares");
        ok &= st.t0 == &r0 + &r0 && st.t_star == &r0 + &r1;
        ok &= burgers::branch_delta(&st.t0, &x0).expect("square").is_zero();
        // r+ on [0, t0], r- from t0 on
        for k in 0..=8 {
            let t = &st.t0 * rat(k, 4);
            let (plus, minus) = burgers::branch_values(&t, &x0).expect("square");
            ok &= if k <= 4 { plus == r0 } else { minus == r0 };
        }
    }
    outcome(ok, "shock times, delta(t0) = 0 and branch values exact")
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let r = ideals::bracket_report();
    let elapsed = start.elapsed();
    let ok = r.p12_in_ideal
        && r.p23_in_ideal
        && !r.p13_in_ideal
        && r.p13_squared_in_ideal
        && r.brackets_in_radical
        && elapsed < Duration::from_secs(60);
    outcome(ok, format!("{} ({elapsed:.1?})", r.to_string().replace('\n', ", ")))
}

fn criterion_11() -> Outcome {
    const ORDER: usize = 8;
    let coord = Arc::new(Relation::<F>::coordinates(ORDER));
    let per = ORDER * (ORDER + 1) / 2;
    let elem_strategy = prop::collection::vec(prop::collection::vec(-8i64..=8, per), 1..6);
    let mut runner = TestRunner::new(Config { cases: 100, failure_persistence: None, rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha, ..Config::default() });
    let coord_in = Arc::clone(&coord);
    let inverse = runner.run(&elem_strategy, move |cs| {
        let coeffs = cs
            .into_iter()
            .map(|v| {
                let mut s = Series::zero(ORDER);
                let mut it = v.into_iter();
                for d in 0..ORDER {
                    for m in 0..=d {
                        s.set(d - m, m, c_ratio(it.next().unwrap(), 8));
                    }
                }
                s
            })
            .collect();
        let u = ZElement::new(coeffs, Arc::clone(&coord_in)).unwrap();
        let back = u.primitive_q().diff_q().unwrap();
        let err = back.max_abs_diff(&u.canonical().unwrap());
        prop_assert!(err < F::tolerance(5), "{}", err);
        Ok(())
    });
    let p = Series::t(ORDER);
    let q = Series::x(ORDER);
    let z = |k| ZElement::monomial(Arc::clone(&coord), k, Series::one(ORDER)).unwrap();
    let cubic = z(3).sub(&ZElement::new(vec![Series::zero(ORDER), p.clone()], Arc::clone(&coord)).unwrap()).unwrap();
    let kills = cubic.reduce().diff_p().unwrap().max_abs_coeff().to_f64_lossy();
    let expected = ZElement::new(
        vec![Series::zero(ORDER), q.scale(c_ratio(3, 4)), p.scale(c_ratio(1, 4))],
        Arc::clone(&coord),
    )
    .unwrap();
    let prim = z(1).primitive_q().reduce().max_abs_diff(&expected).to_f64_lossy();
    outcome(
        inverse.is_ok() && kills == 0.0 && prim == 0.0,
        format!(
            "inverse on 100 elements: {}, |d_p(z^3 - pz)| = {kills:.1e}, primitive(z) error {prim:.1e}",
            if inverse.is_ok() { "ok" } else { "failed" }
        ),
    )
}

fn criterion_12() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 20, failure_persistence: None, rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha, ..Config::default() });
    let strategy = (0.4f64..1.5, 0.05f64..0.2, 0.0f64..std::f64::consts::TAU, -1.0f64..1.0, -1.0f64..1.0);
    let result = runner.run(&strategy, |(zc, frac, theta, cp, cq)| {
        // constant loop at a generic point
        let constant = PathInPQ::<F>::constant(c_f64(cp, 0.3), c_f64(cq, -0.2), 4).unwrap();
        prop_assert_eq!(burgers::monodromy(&constant).unwrap(), Permutation::IDENTITY);
        // small circle around the regular discriminant point (3z^2, -2z^3)
        let p = c_f64::<F>(3.0 * zc * zc, 0.0);
        let q0 = c_f64::<F>(-2.0 * zc * zc * zc, 0.0);
        let radius = frac * 2.0 * zc.powi(3);
        let small = PathInPQ::circle_q(p, q0, F::from_f64_lossy(radius), theta, 64).unwrap();
        let perm = burgers::monodromy(&small).unwrap();
        prop_assert!(perm.is_transposition(), "{:?}", perm);
        let there_and_back = small.then(&small.reversed());
        prop_assert_eq!(burgers::monodromy(&there_and_back).unwrap(), Permutation::IDENTITY);
        Ok(())
    });
    match result {
        Ok(()) => outcome(true, "20 randomized loops: identity, transposition, identity"),
        Err(e) => outcome(false, format!("20 randomized loops: {e}")),
    }
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |n: usize, title: &str, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failures += 1;
        }
        println!("{tag} criterion {n:>2} {title}: {}", o.detail);
    };

    let test1 = Case { name: "test1", order: 25, tracked: tracked(2), data: data0 };
    let test1b = Case { name: "test1/alt", order: 25, tracked: tracked(2), data: data1 };
    let test2 = Case { name: "test2", order: 10, tracked: tracked(4), data: data2 };
    let test3 = Case { name: "test3", order: 25, tracked: tracked(3), data: data5 };
    let test3b = Case { name: "test3/alt", order: 25, tracked: tracked(3), data: data6 };

    let r1 = run(&test1, Mode::PaperFaithful, true);
    report(
        1,
        "test 1 coefficients",
        check_reproduction(
            &r1,
            &[(1, 0, 0.5), (2, 0, 0.0250), (3, 0, 0.0068)],
            &[(1, 0, 1.0), (0, 1, 1.0), (2, 0, -0.0333), (3, 0, -0.0050)],
        ),
    );

    let r3 = run(&test3, Mode::PaperFaithful, false);
    report(
        2,
        "test 3 coefficients",
        check_reproduction(
            &r3,
            &[(1, 0, 0.5), (2, 0, 0.0113), (3, 0, 0.0019)],
            &[(1, 0, 1.0), (0, 1, 1.0), (2, 0, -0.0200), (3, 0, -0.0017)],
        ),
    );

    let r2 = run(&test2, Mode::PaperFaithful, false);
    report(
        3,
        "test 2 mixed coefficients",
        check_reproduction(&r2, &[(2, 0, 0.0250), (2, 1, 0.0004), (2, 2, 0.0025)], &[(2, 0, -0.0333), (2, 1, 0.0133)]),
    );

    let iterations = FixedPointConfig::<F>::reference().iterations;
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, r) in [(&test1, &r1), (&test2, &r2), (&test3, &r3)] {
        let (good, detail) = convergence(case.name, r, &case.tracked, iterations);
        ok &= good;
        parts.push(detail);
    }
    report(4, "final diff <= 1e-3 x first diff", outcome(ok, parts.join("; ")));

    let r1b = run(&test1b, Mode::PaperFaithful, false);
    let r3b = run(&test3b, Mode::PaperFaithful, false);
    let (ok1, w1) = agreement(&r1, &r1b, &test1.tracked);
    let (ok3, w3) = agreement(&r3, &r3b, &test3.tracked);
    report(
        5,
        "initialisation independence",
        outcome(ok1 && ok3, format!("test 1 max diff {w1:.2e}, test 3 max diff {w3:.2e}")),
    );

    report(6, "eikonal origin values", criterion_6());

    let corrected = run(&test1, Mode::Corrected, true);
    report(7, "residual decays from iteration 5 to 25", criterion_7(&r1, &corrected));
    report(8, "Burgers CK with zero datum", criterion_8());
    report(9, "shock times and branch values", criterion_9());
    report(10, "Poisson bracket memberships", criterion_10());
    report(11, "z-algebra identities", criterion_11());
    report(12, "monodromy", criterion_12());

    if failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria fail");
        ExitCode::FAILURE
    }
}
