//! Subcommand implementations. Each returns the text printed on success.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_traits::Zero;
use ramify::burgers;
use ramify::fixedpoint::{self, FixedPointConfig, SolutionData};
use ramify::ideals;
use ramify::scalar::{c_f64, c_to_f64, modulus, C};
use ramify::zring::{datum_to_initial, CauchyDatum};
use ramify::{Real, Segment, TruncatedSeries2, TwoFloat};
use serde::Serialize;

use crate::config::{b_index, digits_override, precision, ModeName, Precision, RunConfig, Value};
use crate::expr::{parse_constant, parse_poly, rational_to_complex};
use crate::CliError;

type Ts<T> = TruncatedSeries2<T>;

/// Calls `$f::<T>(args)` with the scalar type selected by a digit count.
macro_rules! with_precision {
    ($digits:expr, $f:ident($($arg:expr),*)) => {
        match precision($digits)? {
            Precision::Double => $f::<f64>($($arg),*),
            Precision::DoubleDouble => $f::<TwoFloat>($($arg),*),
        }
    };
}

pub const REPORT_HEADER: [&str; 3] = ["iteration", "component", "norm"];

#[derive(Debug, Clone, PartialEq)]
pub struct NormRow {
    pub iteration: usize,
    pub component: String,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub t: usize,
    pub x: usize,
    pub re: f64,
    pub im: f64,
}

/// Contents of `final.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalReport {
    pub digits: u32,
    pub order: usize,
    pub iterations: usize,
    pub mode: ModeName,
    pub p: Vec<Term>,
    pub q: Vec<Term>,
    pub b: Vec<Vec<Term>>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateOutput {
    pub rows: Vec<NormRow>,
    pub report: FinalReport,
}

fn terms<T: Real>(s: &Ts<T>) -> Vec<Term> {
    s.terms()
        .map(|(t, x, c)| {
            let c = c_to_f64(c);
            Term { t, x, re: c.re, im: c.im }
        })
        .collect()
}

fn value<T: Real>(v: &Value) -> Result<C<T>, CliError> {
    Ok(match v {
        Value::Pair([re, im]) => c_f64(*re, *im),
        Value::Real(re) => c_f64(*re, 0.0),
        Value::Expr(src) => rational_to_complex(&parse_constant(src)?),
    })
}

fn series<T: Real>(src: &str, order: usize) -> Result<Ts<T>, CliError> {
    Ok(parse_poly(src)?.to_series(order))
}

/// Initial guess and the `b_k(0, x)` slices every iterate must keep.
pub fn initial_data<T: Real>(cfg: &RunConfig, order: usize) -> Result<(SolutionData<T>, Vec<Ts<T>>), CliError> {
    let get = |name: &str, fallback: &str| {
        series::<T>(cfg.initial.get(name).map_or(fallback, String::as_str), order)
    };
    let p = get("p", "t/2")?;
    let q = get("q", "t + x")?;
    let mut b = vec![Ts::zero(order); cfg.data_length];
    for (name, src) in &cfg.initial {
        if let Some(k) = b_index(name) {
            b[k] = series(src, order)?;
        }
    }
    let tol = T::tolerance(5);
    if p.at_t0().max_abs_coeff() > tol || (&q.at_t0() - &Ts::x(order)).max_abs_coeff() > tol {
        return Err(CliError::Config("initial data need p(0, x) = 0 and q(0, x) = x".into()));
    }
    let slices: Vec<Ts<T>> = match &cfg.datum {
        None => b.iter().map(Ts::at_t0).collect(),
        Some(d) => {
            let coeffs = d.c.iter().map(value::<T>).collect::<Result<Vec<_>, _>>()?;
            let datum = CauchyDatum::from_coeffs(&coeffs)?;
            let mut overrides = BTreeMap::new();
            for (name, src) in &d.overrides {
                let k = b_index(name).ok_or_else(|| CliError::Config(format!("unknown override {name:?}")))?;
                overrides.insert(k, series::<T>(src, order)?);
            }
            let slices = datum_to_initial(&datum, &overrides, cfg.data_length, order)?.b;
            for (k, (bk, sk)) in b.iter().zip(&slices).enumerate() {
                if (&bk.at_t0() - sk).max_abs_coeff() > tol {
                    return Err(CliError::Config(format!("initial b{k}(0, x) does not match the datum ({sk})")));
                }
            }
            slices
        }
    };
    Ok((SolutionData::new(p, q, b), slices))
}

fn run_iterate<T: Real>(cfg: &RunConfig, digits: u32, progress: bool) -> Result<IterateOutput, CliError> {
    let segment = Segment::new(cfg.segment[0], cfg.segment[1], cfg.samples)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let fcfg = FixedPointConfig::<T> {
        order: cfg.order,
        iterations: cfg.iterations,
        x0: c_f64(cfg.x0[0], cfg.x0[1]),
        segment,
        mode: cfg.mode.into(),
        track_residual: false,
    };
    let (d0, slices) = initial_data::<T>(cfg, fcfg.state_order())?;
    let total = cfg.iterations;
    let out = fixedpoint::iterate_with(&d0, &slices, &fcfg, |i, _| {
        if progress {
            eprintln!("iteration {i}/{total}");
        }
    })?;
    let rows = out
        .report
        .rows
        .iter()
        .map(|r| NormRow { iteration: r.iteration, component: r.component.to_string(), norm: r.norm.to_f64_lossy() })
        .collect();
    let s = &out.solution;
    let residual = fixedpoint::residual(s, fcfg.x0, &fcfg.segment).norm.to_f64_lossy();
    let report = FinalReport {
        digits,
        order: cfg.order,
        iterations: cfg.iterations,
        mode: cfg.mode,
        p: terms(&s.p),
        q: terms(&s.q),
        b: s.b.iter().map(terms).collect(),
        residual,
    };
    Ok(IterateOutput { rows, report })
}

/// Runs the fixed-point iteration without touching the file system.
pub fn iterate(cfg: &RunConfig, progress: bool) -> Result<IterateOutput, CliError> {
    cfg.validate()?;
    let digits = cfg.effective_digits()?;
    with_precision!(digits, run_iterate(cfg, digits, progress))
}

pub fn format_norm(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_report(rows: &[NormRow], path: &Path) -> Result<(), CliError> {
    let io = |source: std::io::Error| CliError::Io { context: format!("writing {}", path.display()), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(REPORT_HEADER).map_err(|e| io(e.into()))?;
    for r in rows {
        w.write_record([r.iteration.to_string(), r.component.clone(), format_norm(r.norm)])
            .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// `iterate --config FILE`: writes `report.csv` and `final.json` into `out_dir`.
pub fn cmd_iterate(config: &Path, out_dir: &Path) -> Result<String, CliError> {
    let cfg = RunConfig::load(config)?;
    let out = iterate(&cfg, true)?;
    let io = |what: &Path, source| CliError::Io { context: format!("writing {}", what.display()), source };
    fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let csv_path = out_dir.join("report.csv");
    write_report(&out.rows, &csv_path)?;
    let json_path = out_dir.join("final.json");
    let json = serde_json::to_string_pretty(&out.report).expect("report serialises");
    fs::write(&json_path, json + "\n").map_err(|e| io(&json_path, e))?;
    Ok(format!(
        "wrote {} ({} rows) and {}\nfinal residual {}",
        csv_path.display(),
        out.rows.len(),
        json_path.display(),
        format_norm(out.report.residual)
    ))
}

fn format_real(r: f64) -> String {
    if r == r.round() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else if r.abs() < 1e-4 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Compact rendering such as `t + 1/2*x` with coefficients below `tol` dropped.
pub fn format_series<T: Real>(s: &Ts<T>, tol: T) -> String {
    let mut out = String::new();
    for (l, m, c) in s.terms() {
        if modulus(c) <= tol {
            continue;
        }
        let c64 = c_to_f64(c);
        let (neg, coeff) = if c.im.abs() <= tol {
            (c64.re < 0.0, format_real(c64.re.abs()))
        } else {
            (false, format!("({}{:+}i)", format_real(c64.re), c64.im))
        };
        let mut factors = Vec::new();
        if coeff != "1" || (l == 0 && m == 0) {
            factors.push(coeff);
        }
        for (name, e) in [("t", l), ("x", m)] {
            match e {
                0 => {}
                1 => factors.push(name.to_string()),
                _ => factors.push(format!("{name}^{e}")),
            }
        }
        match (out.is_empty(), neg) {
            (true, true) => out.push('-'),
            (true, false) => {}
            (false, true) => out.push_str(" - "),
            (false, false) => out.push_str(" + "),
        }
        out.push_str(&factors.join("*"));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn format_residual(r: f64) -> String {
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r:.3e}")
    }
}

fn run_burgers<T: Real>(a0: &str, order: usize, shocks: &[String]) -> Result<String, CliError> {
    let a0 = series::<T>(a0, order)?;
    let s = burgers::ck_solve(&a0, order)?;
    let tol = T::tolerance(3);
    let mut lines = vec![
        format!(
            "p = {}, q = {}, a = {}, residual {}",
            format_series(&s.p, tol),
            format_series(&s.q, tol),
            format_series(&s.a, tol),
            format_residual(burgers::ck_equations_residual(&s).to_f64_lossy())
        ),
        format!("burgers identity residual {}", format_residual(burgers::burgers_residual(&s).to_f64_lossy())),
        "x0,x1,t0,t_star".to_string(),
    ];
    for pair in shocks {
        let parts: Vec<&str> = pair.split(',').collect();
        let [x0, x1] = parts[..] else {
            return Err(CliError::Config(format!("shock pair {pair:?} is not X0,X1")));
        };
        let (x0, x1) = (parse_constant(x0)?, parse_constant(x1)?);
        let st = burgers::shock_times(&x0, &x1)?;
        lines.push(format!("{x0},{x1},{},{}", st.t0, st.t_star));
    }
    Ok(lines.join("\n"))
}

/// `burgers --a0 EXPR`: Cauchy-Kovalevskaya solution, its residuals and shock times.
pub fn cmd_burgers(a0: &str, order: usize, shocks: &[String]) -> Result<String, CliError> {
    let digits = digits_override()?.unwrap_or(30);
    with_precision!(digits, run_burgers(a0, order, shocks))
}

/// `ideals`: membership of the Poisson brackets of the cusp symbols.
pub fn cmd_ideals() -> String {
    ideals::bracket_report().to_string()
}

fn run_datum<T: Real>(c: &str, n: Option<usize>, order: usize) -> Result<String, CliError> {
    let coeffs = c
        .split(',')
        .map(|s| parse_constant(s).map(|r| rational_to_complex::<T>(&r)))
        .collect::<Result<Vec<_>, _>>()?;
    let datum = CauchyDatum::from_coeffs(&coeffs)?;
    let n = n.unwrap_or(coeffs.len());
    let d = datum_to_initial(&datum, &BTreeMap::new(), n, order)?;
    let tol = T::tolerance(3);
    let mut lines = vec![format!("p = {}", format_series(&d.p, tol)), format!("q = {}", format_series(&d.q, tol))];
    lines.extend(d.b.iter().enumerate().map(|(k, b)| format!("b{k} = {}", format_series(b, tol))));
    Ok(lines.join("\n"))
}

/// `datum --c LIST`: initial slices for `u(0, x) = sum_j c_j x^{1 + (j-1)/3}`.
pub fn cmd_datum(c: &str, n: Option<usize>, order: usize) -> Result<String, CliError> {
    if order.is_zero() {
        return Err(CliError::Config("order must be positive".into()));
    }
    let digits = digits_override()?.unwrap_or(30);
    with_precision!(digits, run_datum(c, n, order))
}
