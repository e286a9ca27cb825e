//! Run configuration in TOML.
//!
//! ```toml
//! [map]
//! numerator = [-1, 0, 1]        # ascending powers; entries are numbers or [re, im]
//! denominator = [1]
//!
//! [potential]
//! expression = "neglogderiv(0.5)"
//!
//! [run]
//! alpha = 0.2
//! c_schedule = [1.0, 0.5, 0.25]
//! n_min = 1
//! n_max = 12
//! window = 4
//! stabilization_tol = 1e-3
//!
//! [sample]
//! count = 20000
//! depth = 64
//! seed = 7
//!
//! [separated]
//! epsilon_schedule = [0.1, 0.05, 0.02]
//! construction = "pullback"     # or "greedy"
//!
//! [bowen]
//! bracket = [0.5, 1.5]
//! tol = 1e-3
//!
//! [output]
//! directory = "out"
//! formats = ["csv", "json"]
//! ```
//!
//! Only `[map]` is required.

use crate::map::RationalMap;
use crate::periodic::SearchOptions;
use crate::potential::{Potential, PotentialError};
use crate::separated::Construction;
use num_complex::Complex64;
use serde::Deserialize;
use std::collections::HashMap;
use std::ops::Range;
use std::path::PathBuf;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{}{message}", position_prefix(*.position))]
    Invalid {
        /// 1-based line and column of the offending value, when it came from the file.
        position: Option<(usize, usize)>,
        field: &'static str,
        message: String,
    },
}

fn position_prefix(position: Option<(usize, usize)>) -> String {
    match position {
        Some((line, column)) => format!("line {line}, column {column}: "),
        None => String::new(),
    }
}

impl ConfigError {
    fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            position: None,
            field,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    pub count: usize,
    pub depth: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowenConfig {
    pub bracket: (f64, f64),
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub numerator: Vec<Complex64>,
    pub denominator: Vec<Complex64>,
    pub potential: String,
    pub alpha: f64,
    pub c_schedule: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub window: usize,
    pub stabilization_tol: f64,
    pub sample: SampleConfig,
    pub epsilon_schedule: Vec<f64>,
    pub construction: Construction,
    pub bowen: BowenConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Defaults around the given map coefficients.
    pub fn new(numerator: Vec<Complex64>, denominator: Vec<Complex64>) -> Self {
        Self {
            numerator,
            denominator,
            potential: "const(0)".into(),
            alpha: 0.2,
            c_schedule: vec![1.0, 0.5, 0.25],
            n_min: 1,
            n_max: 12,
            window: crate::pressure::DEFAULT_WINDOW,
            stabilization_tol: crate::pressure::DEFAULT_STABILIZATION_TOL,
            sample: SampleConfig {
                count: 20_000,
                depth: crate::sampler::DEFAULT_DEPTH,
                seed: 0,
            },
            epsilon_schedule: vec![0.1, 0.05, 0.02],
            construction: Construction::Pullback,
            bowen: BowenConfig {
                bracket: (0.5, 1.5),
                tol: crate::bowen::DEFAULT_TOL,
            },
            output: OutputConfig {
                directory: PathBuf::from("out"),
                formats: vec![Format::Csv, Format::Json],
            },
        }
    }

    pub fn map(&self) -> RationalMap {
        RationalMap::new(self.numerator.clone(), self.denominator.clone()).expect("validated map")
    }

    pub fn potential(&self) -> Potential {
        Potential::parse(&self.potential).expect("validated potential")
    }

    pub fn n_range(&self) -> std::ops::RangeInclusive<usize> {
        self.n_min..=self.n_max
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }

    /// Checks every numeric constraint; the error names the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let map = RationalMap::new(self.numerator.clone(), self.denominator.clone())
            .map_err(|e| ConfigError::invalid("numerator", format!("invalid map: {e}")))?;
        Potential::parse(&self.potential).map_err(|e| match e {
            PotentialError::Syntax { column, message } => ConfigError::invalid(
                "expression",
                format!("potential syntax error at column {column}: {message}"),
            ),
            other => ConfigError::invalid("expression", other.to_string()),
        })?;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ConfigError::invalid("alpha", format!("alpha must be positive, got {}", self.alpha)));
        }
        crate::pressure::check_c_schedule(&self.c_schedule).map_err(|e| ConfigError::invalid("c_schedule", e.to_string()))?;
        if self.n_min == 0 {
            return Err(ConfigError::invalid("n_min", "n_min must be at least 1"));
        }
        if self.n_min > self.n_max {
            return Err(ConfigError::invalid(
                "n_max",
                format!("n_max ({}) must not be below n_min ({})", self.n_max, self.n_min),
            ));
        }
        let budget = SearchOptions::default().n_max(map.degree());
        if self.n_max > budget {
            return Err(ConfigError::invalid(
                "n_max",
                format!("n_max ({}) exceeds the budget of {budget} for degree {}", self.n_max, map.degree()),
            ));
        }
        if self.window == 0 {
            return Err(ConfigError::invalid("window", "window must be at least 1"));
        }
        if !(self.stabilization_tol > 0.0) {
            return Err(ConfigError::invalid("stabilization_tol", "stabilization_tol must be positive"));
        }
        if self.sample.count == 0 {
            return Err(ConfigError::invalid("count", "sample count must be at least 1"));
        }
        if self.sample.depth < 2 {
            return Err(ConfigError::invalid("depth", "sample depth must be at least 2"));
        }
        if self.epsilon_schedule.is_empty() || self.epsilon_schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(ConfigError::invalid("epsilon_schedule", "epsilon_schedule entries must be positive"));
        }
        let (lo, hi) = self.bowen.bracket;
        if !(lo < hi) {
            return Err(ConfigError::invalid("bracket", "bracket must satisfy t_lo < t_hi"));
        }
        if !(self.bowen.tol > 0.0) {
            return Err(ConfigError::invalid("tol", "bowen tol must be positive"));
        }
        if self.output.formats.is_empty() {
            return Err(ConfigError::invalid("formats", "at least one output format is required"));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Coeff {
    Real(f64),
    Complex([f64; 2]),
}

impl From<&Coeff> for Complex64 {
    fn from(c: &Coeff) -> Self {
        match *c {
            Coeff::Real(re) => Complex64::new(re, 0.0),
            Coeff::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    map: RawMap,
    potential: Option<RawPotential>,
    run: Option<RawRun>,
    sample: Option<RawSample>,
    separated: Option<RawSeparated>,
    bowen: Option<RawBowen>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    numerator: Spanned<Vec<Coeff>>,
    denominator: Option<Spanned<Vec<Coeff>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    expression: Spanned<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    alpha: Option<Spanned<f64>>,
    c_schedule: Option<Spanned<Vec<f64>>>,
    n_min: Option<Spanned<usize>>,
    n_max: Option<Spanned<usize>>,
    window: Option<Spanned<usize>>,
    stabilization_tol: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    count: Option<Spanned<usize>>,
    depth: Option<Spanned<usize>>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeparated {
    epsilon_schedule: Option<Spanned<Vec<f64>>>,
    construction: Option<Construction>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBowen {
    bracket: Option<Spanned<[f64; 2]>>,
    tol: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    formats: Option<Spanned<Vec<Format>>>,
}

/// Records the span of a field and unwraps it.
fn take<T>(spans: &mut HashMap<&'static str, Range<usize>>, field: &'static str, value: Option<Spanned<T>>) -> Option<T> {
    value.map(|v| {
        spans.insert(field, v.span());
        v.into_inner()
    })
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let mut spans = HashMap::new();
    let numerator: Vec<Complex64> = take(&mut spans, "numerator", Some(raw.map.numerator))
        .unwrap_or_default()
        .iter()
        .map(Complex64::from)
        .collect();
    let denominator = take(&mut spans, "denominator", raw.map.denominator)
        .map_or_else(|| vec![Complex64::new(1.0, 0.0)], |d| d.iter().map(Complex64::from).collect());
    let mut cfg = RunConfig::new(numerator, denominator);

    if let Some(p) = raw.potential {
        cfg.potential = take(&mut spans, "expression", Some(p.expression)).unwrap_or_default();
    }
    if let Some(r) = raw.run {
        if let Some(v) = take(&mut spans, "alpha", r.alpha) {
            cfg.alpha = v;
        }
        if let Some(v) = take(&mut spans, "c_schedule", r.c_schedule) {
            cfg.c_schedule = v;
        }
        if let Some(v) = take(&mut spans, "n_min", r.n_min) {
            cfg.n_min = v;
        }
        if let Some(v) = take(&mut spans, "n_max", r.n_max) {
            cfg.n_max = v;
        }
        if let Some(v) = take(&mut spans, "window", r.window) {
            cfg.window = v;
        }
        if let Some(v) = take(&mut spans, "stabilization_tol", r.stabilization_tol) {
            cfg.stabilization_tol = v;
        }
    }
    if let Some(s) = raw.sample {
        if let Some(v) = take(&mut spans, "count", s.count) {
            cfg.sample.count = v;
        }
        if let Some(v) = take(&mut spans, "depth", s.depth) {
            cfg.sample.depth = v;
        }
        if let Some(v) = s.seed {
            cfg.sample.seed = v;
        }
    }
    if let Some(s) = raw.separated {
        if let Some(v) = take(&mut spans, "epsilon_schedule", s.epsilon_schedule) {
            cfg.epsilon_schedule = v;
        }
        if let Some(v) = s.construction {
            cfg.construction = v;
        }
    }
    if let Some(b) = raw.bowen {
        if let Some([lo, hi]) = take(&mut spans, "bracket", b.bracket) {
            cfg.bowen.bracket = (lo, hi);
        }
        if let Some(v) = take(&mut spans, "tol", b.tol) {
            cfg.bowen.tol = v;
        }
    }
    if let Some(o) = raw.output {
        if let Some(v) = o.directory {
            cfg.output.directory = v;
        }
        if let Some(v) = take(&mut spans, "formats", o.formats) {
            cfg.output.formats = v;
        }
    }

    cfg.validate().map_err(|e| match e {
        ConfigError::Invalid { field, message, .. } => ConfigError::Invalid {
            position: spans.get(field).map(|s| line_column(text, s.start)),
            field,
            message,
        },
        other => other,
    })?;
    Ok(cfg)
}
