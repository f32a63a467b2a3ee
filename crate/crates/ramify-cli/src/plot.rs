//! Semilog SVG of the convergence report: one curve per component.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::commands::REPORT_HEADER;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Row {
    pub iteration: usize,
    pub component: String,
    pub norm: f64,
}

pub fn read_report(path: &Path) -> Result<Vec<Row>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::Io { context: format!("reading {}", path.display()), source })?;
    parse_report(&text)
}

pub fn parse_report(text: &str) -> Result<Vec<Row>, CliError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| CliError::Config(format!("malformed report: {e}")))?;
    if headers.iter().ne(REPORT_HEADER) {
        return Err(CliError::Config(format!("report header must be {}", REPORT_HEADER.join(","))));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| CliError::Config(format!("malformed report: {e}"))))
        .collect()
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

/// Components in order of first appearance, each with its `(iteration, log10 norm)` points.
/// Unless `all` is set, only components still reported at the last iteration are kept.
fn curves(rows: &[Row], all: bool) -> Vec<(String, Vec<(f64, f64)>)> {
    let last = rows.iter().map(|r| r.iteration).max().unwrap_or(0);
    let keep = |c: &str| all || rows.iter().any(|r| r.iteration == last && r.component == c);
    let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows.iter().filter(|r| keep(&r.component)) {
        let i = match out.iter().position(|(c, _)| *c == r.component) {
            Some(i) => i,
            None => {
                out.push((r.component.clone(), Vec::new()));
                out.len() - 1
            }
        };
        // zero differences have no place on a log axis
        if r.norm > 0.0 && r.norm.is_finite() {
            out[i].1.push((r.iteration as f64, r.norm.log10()));
        }
    }
    out
}

pub fn render_svg(rows: &[Row], all: bool) -> String {
    let curves = curves(rows, all);
    let points = curves.iter().flat_map(|(_, p)| p.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let (y_lo, mut y_hi) = (y_lo.floor(), y_hi.ceil());
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let step = ((y_hi - y_lo) / 10.0).ceil().max(1.0);
    let mut e = y_lo;
    while e <= y_hi {
        let y = sy(e);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#, LEFT - 6.0, y + 4.0, e as i64);
        e += step;
    }
    let xstep = ((x_hi - x_lo) / 10.0).ceil().max(1.0);
    let mut i = x_lo;
    while i <= x_hi {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(i),
            TOP + ph + 18.0,
            i as i64
        );
        i += xstep;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    for (k, (name, pts)) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let ly = TOP + 16.0 * (k as f64 + 1.0);
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{name}</text>"#, lx + 26.0);
    }
    s.push_str("</svg>\n");
    s
}

/// `plot --in report.csv --out plot.svg`.
pub fn cmd_plot(input: &Path, output: &Path, all: bool) -> Result<String, CliError> {
    let rows = read_report(input)?;
    let svg = render_svg(&rows, all);
    fs::write(output, svg)
        .map_err(|source| CliError::Io { context: format!("writing {}", output.display()), source })?;
    let n = curves(&rows, all).len();
    Ok(format!("wrote {} ({n} curves)", output.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<Row> {
        let mut v = Vec::new();
        for i in 1..=5 {
            for (c, scale) in [("p", 1e-3), ("q", 1e-2), ("b0", 1.0), ("b1", 0.5)] {
                v.push(Row { iteration: i, component: c.into(), norm: scale * 10f64.powi(-(i as i32)) });
            }
        }
        v
    }

    #[test]
    fn one_curve_per_component() {
        let svg = render_svg(&rows(), false);
        assert_eq!(svg.matches("<polyline").count(), 4);
        for c in ["p", "q", "b0", "b1"] {
            assert!(svg.contains(&format!(">{c}</text>")));
        }
        assert_eq!(svg, render_svg(&rows(), false));
    }

    #[test]
    fn dropped_components_need_all() {
        let mut r = rows();
        r.push(Row { iteration: 1, component: "b7".into(), norm: 1.0 });
        assert_eq!(render_svg(&r, false).matches("<polyline").count(), 4);
        assert_eq!(render_svg(&r, true).matches("<polyline").count(), 5);
    }

    #[test]
    fn empty_report() {
        assert!(parse_report("").unwrap().is_empty());
        assert!(parse_report("iteration,component,norm\n").unwrap().is_empty());
        let svg = render_svg(&[], false);
        assert!(svg.starts_with("<svg") && !svg.contains("<polyline"));
    }

    #[test]
    fn zero_norms_are_skipped() {
        let rows = vec![
            Row { iteration: 1, component: "p".into(), norm: 0.0 },
            Row { iteration: 2, component: "p".into(), norm: 1e-4 },
        ];
        let c = curves(&rows, false);
        assert_eq!(c, vec![("p".to_string(), vec![(2.0, -4.0)])]);
        assert!(render_svg(&rows, false).contains("<polyline"));
    }

    #[test]
    fn malformed_reports() {
        assert!(matches!(parse_report("a,b\n1,2\n"), Err(CliError::Config(_))));
        assert!(matches!(parse_report("iteration,component,norm\nx,p,1\n"), Err(CliError::Config(_))));
    }
}
