//! JSON run configuration. Defaults reproduce the reference runs.

use std::collections::BTreeMap;
use std::path::Path;

use ramify::fixedpoint::Mode;
use serde::{Deserialize, Serialize};

use crate::expr;
use crate::CliError;

/// Environment variable overriding `precision_digits`.
pub const DIGITS_ENV: &str = "RAMIFY_DIGITS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    #[default]
    PaperFaithful,
    Corrected,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::PaperFaithful => Mode::PaperFaithful,
            ModeName::Corrected => Mode::Corrected,
        }
    }
}

/// A complex number as `[re, im]`, a real number, or a constant expression such as `"3/4"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Pair([f64; 2]),
    Real(f64),
    Expr(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    /// `c_1, c_2, ...`
    pub c: Vec<Value>,
    /// Initial slices `b_k(0, x)` replacing the canonical placement, e.g. `"b2": "x/10"`.
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub precision_digits: u32,
    pub order: usize,
    pub data_length: usize,
    pub iterations: usize,
    pub x0: [f64; 2],
    pub segment: [f64; 2],
    pub samples: usize,
    pub mode: ModeName,
    /// Initial guess by component name (`p`, `q`, `b0`, ...); missing `b_k` are zero.
    pub initial: BTreeMap<String, String>,
    pub datum: Option<DatumConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let initial = [("p", "t/2"), ("q", "t + x"), ("b0", "1"), ("b1", "1")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self {
            precision_digits: 30,
            order: 25,
            data_length: 80,
            iterations: 25,
            x0: [0.0, 0.1],
            segment: [0.0, 0.1],
            samples: 1001,
            mode: ModeName::PaperFaithful,
            initial,
            datum: None,
        }
    }
}

/// Index `k` of a component name `b<k>`.
pub fn b_index(name: &str) -> Option<usize> {
    name.strip_prefix('b')?.parse().ok()
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { context: format!("reading {}", path.display()), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.order < 2 {
            return bad(format!("order {} is below 2", self.order));
        }
        let need = 3 * self.iterations + 5;
        if self.data_length < need {
            return bad(format!("data_length {} is below 3*iterations + 5 = {need}", self.data_length));
        }
        let [a, b] = self.segment;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return bad(format!("segment [{a}, {b}] is empty"));
        }
        if self.samples < 2 {
            return bad("samples must be at least 2".into());
        }
        if !self.x0.iter().all(|v| v.is_finite()) {
            return bad("x0 must be finite".into());
        }
        for (name, src) in &self.initial {
            match name.as_str() {
                "p" | "q" => {}
                n => match b_index(n) {
                    Some(k) if k < self.data_length => {}
                    Some(k) => return bad(format!("initial {n}: index {k} beyond data_length")),
                    None => return bad(format!("unknown initial component {n:?}")),
                },
            }
            expr::parse_poly(src).map_err(|e| CliError::Config(format!("initial {name}: {e}")))?;
        }
        if let Some(d) = &self.datum {
            for (name, src) in &d.overrides {
                if b_index(name).is_none() {
                    return bad(format!("unknown override {name:?}"));
                }
                expr::parse_poly(src).map_err(|e| CliError::Config(format!("override {name}: {e}")))?;
            }
        }
        precision(self.effective_digits()?)?;
        Ok(())
    }

    /// `precision_digits`, unless the environment override is set.
    pub fn effective_digits(&self) -> Result<u32, CliError> {
        digits_override().map(|d| d.unwrap_or(self.precision_digits))
    }
}

pub fn digits_override() -> Result<Option<u32>, CliError> {
    match std::env::var(DIGITS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{DIGITS_ENV}={v:?} is not a digit count"))),
        Err(_) => Ok(None),
    }
}

/// Scalar type backing a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    DoubleDouble,
}

pub fn precision(digits: u32) -> Result<Precision, CliError> {
    match digits {
        0 => Err(CliError::Config("precision_digits must be positive".into())),
        1..=16 => Ok(Precision::Double),
        17..=31 => Ok(Precision::DoubleDouble),
        d => Err(CliError::Config(format!("{d} digits exceed the supported 31"))),
    }
}
