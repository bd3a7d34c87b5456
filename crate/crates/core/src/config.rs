//! Sectioned TOML run configuration with defaults, validation and echo.
//!
//! ```toml
//! [problem]
//! dim = 3
//! p = 5.0
//! lambda = 0.5
//! init = "gaussian:0.1:2"
//!
//! [grid]
//! r_max = 16.0
//! nodes = 1024
//!
//! [stepping]
//! frame = "v"
//! dt = 1e-3
//! horizon = 8.0
//! sample_every = 100
//!
//! [experiment]
//! kind = "evolve"
//! q_list = [2.0, 4.0]
//! ```

use std::ops::Range;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::constants::ProblemParams;
use crate::diagnostics::Problem;
use crate::dynamics::{InitialDataSpec, StepControls};
use crate::error::{Error, Result};
use crate::grid::{Frame, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Evolve,
    Decay,
    Scan,
    NegativeEntropy,
    CrossFrame,
    WangAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSettings {
    pub r_max: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteppingSettings {
    pub frame: Frame,
    pub dt: f64,
    pub horizon: f64,
    pub sample_every: usize,
    pub blowup_threshold: f64,
    pub dt_min: f64,
    pub decay_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub kind: ExperimentKind,
    pub q_list: Vec<f64>,
    /// Rate-fit window in `s`; empty means `[max(s1, 2), horizon - 1]`.
    pub fit_window: Vec<f64>,
    pub p_list: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Output paths; empty strings mean "do not write".
    pub csv: String,
    pub json: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemParams,
    pub grid: GridSettings,
    pub stepping: SteppingSettings,
    pub experiment: ExperimentSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = StepControls::default();
        RunConfig {
            problem: ProblemParams { dim: 3, p: 5.0, lambda: 0.5, init: InitialDataSpec::gaussian(0.1, 2.0) },
            grid: GridSettings { r_max: 16.0, nodes: 1024 },
            stepping: SteppingSettings {
                frame: Frame::V,
                dt: c.dt,
                horizon: c.horizon,
                sample_every: c.sample_every,
                blowup_threshold: c.blowup_threshold,
                dt_min: c.dt_min,
                decay_threshold: c.decay_threshold,
            },
            experiment: ExperimentSettings {
                kind: ExperimentKind::Evolve,
                q_list: vec![2.0, 4.0],
                fit_window: Vec::new(),
                p_list: vec![1.5, 5.0 / 3.0, 5.0],
                amplitudes: vec![0.05, 0.5, 3.0],
                csv: String::new(),
                json: String::new(),
            },
        }
    }
}

impl RunConfig {
    pub fn controls(&self) -> StepControls {
        let s = &self.stepping;
        StepControls {
            dt: s.dt,
            horizon: s.horizon,
            sample_every: s.sample_every,
            blowup_threshold: s.blowup_threshold,
            dt_min: s.dt_min,
            decay_threshold: s.decay_threshold,
        }
    }

    pub fn build_grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.problem.dim, self.grid.nodes, self.grid.r_max)
    }

    pub fn problem<'g>(&self, grid: &'g RadialGrid) -> Result<Problem<'g>> {
        Problem::new(grid, self.problem.clone(), self.experiment.q_list.clone())
    }

    pub fn fit_window(&self) -> Option<(f64, f64)> {
        match self.experiment.fit_window.as_slice() {
            [lo, hi] => Some((*lo, *hi)),
            _ => None,
        }
    }

    pub fn csv_path(&self) -> Option<PathBuf> {
        non_empty(&self.experiment.csv)
    }

    pub fn json_path(&self) -> Option<PathBuf> {
        non_empty(&self.experiment.json)
    }

    /// Checks every constraint that does not depend on where the value came from.
    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.controls().validate()?;
        RadialGrid::new(self.problem.dim, self.grid.nodes, self.grid.r_max)?;
        validate_experiment(&self.experiment).map_err(Error::InvalidParams)
    }

    /// TOML text that parses back to this config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn non_empty(s: &str) -> Option<PathBuf> {
    (!s.is_empty()).then(|| PathBuf::from(s))
}

fn validate_experiment(e: &ExperimentSettings) -> std::result::Result<(), String> {
    if let Some(q) = e.q_list.iter().find(|q| !(**q >= 1.0)) {
        return Err(format!("q_list entries must be >= 1, got {q}"));
    }
    match e.fit_window.as_slice() {
        [] => {}
        [lo, hi] if hi > lo && *lo >= 0.0 => {}
        w => return Err(format!("fit_window must be [lo, hi] with 0 <= lo < hi, got {w:?}")),
    }
    if let Some(p) = e.p_list.iter().find(|p| !(**p > 1.0)) {
        return Err(format!("p must exceed 1, got {p} in p_list"));
    }
    if !e.p_list.windows(2).all(|w| w[0] < w[1]) {
        return Err("p_list must be strictly increasing".into());
    }
    if let Some(a) = e.amplitudes.iter().find(|a| !(**a > 0.0)) {
        return Err(format!("amplitudes must be positive, got {a}"));
    }
    if !e.amplitudes.windows(2).all(|w| w[0] < w[1]) {
        return Err("amplitudes must be strictly increasing".into());
    }
    Ok(())
}

// Raw mirror of the file with spans, so every error can name its line.

type Field<T> = Option<Spanned<T>>;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<RawProblem>,
    grid: Option<RawGrid>,
    stepping: Option<RawStepping>,
    experiment: Option<RawExperiment>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    dim: Field<u32>,
    p: Field<f64>,
    lambda: Field<f64>,
    init: Field<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    r_max: Field<f64>,
    nodes: Field<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawStepping {
    frame: Field<Frame>,
    dt: Field<f64>,
    horizon: Field<f64>,
    sample_every: Field<usize>,
    blowup_threshold: Field<f64>,
    dt_min: Field<f64>,
    decay_threshold: Field<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: Field<ExperimentKind>,
    q_list: Field<Vec<f64>>,
    fit_window: Field<Vec<f64>>,
    p_list: Field<Vec<f64>>,
    amplitudes: Field<Vec<f64>>,
    csv: Field<String>,
    json: Field<String>,
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

/// Applies a raw value to `slot`, checking it with `check`.
fn apply<T>(text: &str, raw: Field<T>, slot: &mut T, check: impl Fn(&T) -> std::result::Result<(), String>) -> Result<()> {
    if let Some(v) = raw {
        let line = line_of(text, v.span());
        let value = v.into_inner();
        check(&value).map_err(|message| Error::Config { line, message })?;
        *slot = value;
    }
    Ok(())
}

fn any<T>(_: &T) -> std::result::Result<(), String> {
    Ok(())
}

fn positive(name: &'static str) -> impl Fn(&f64) -> std::result::Result<(), String> {
    move |v| if *v > 0.0 && v.is_finite() { Ok(()) } else { Err(format!("{name} must be positive, got {v}")) }
}

fn parse_raw<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e: toml::de::Error| Error::Config {
        line: e.span().map_or(0, |s| line_of(text, s)),
        message: e.message().to_string(),
    })
}

/// Parses a config file; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = parse_raw(text)?;
    let mut cfg = RunConfig::default();

    let pr = raw.problem.unwrap_or_default();
    apply(text, pr.dim, &mut cfg.problem.dim, |d| if *d >= 1 { Ok(()) } else { Err("dim must be at least 1".into()) })?;
    apply(text, pr.p, &mut cfg.problem.p, |p| if *p > 1.0 && p.is_finite() { Ok(()) } else { Err(format!("p must exceed 1, got {p}")) })?;
    apply(text, pr.lambda, &mut cfg.problem.lambda, |l| {
        if *l > 0.0 && *l < 1.0 { Ok(()) } else { Err(format!("lambda must lie in (0, 1), got {l}")) }
    })?;
    if let Some(init) = pr.init {
        let line = line_of(text, init.span());
        cfg.problem.init = init
            .into_inner()
            .parse::<InitialDataSpec>()
            .and_then(|s| s.validate().map(|_| s))
            .map_err(|e| Error::Config { line, message: e.to_string() })?;
    }

    let gr = raw.grid.unwrap_or_default();
    apply(text, gr.r_max, &mut cfg.grid.r_max, positive("r_max"))?;
    apply(text, gr.nodes, &mut cfg.grid.nodes, |m| if *m >= 4 { Ok(()) } else { Err(format!("nodes must be at least 4, got {m}")) })?;

    let st = raw.stepping.unwrap_or_default();
    apply(text, st.frame, &mut cfg.stepping.frame, any)?;
    apply(text, st.dt, &mut cfg.stepping.dt, positive("dt"))?;
    apply(text, st.horizon, &mut cfg.stepping.horizon, positive("horizon"))?;
    apply(text, st.sample_every, &mut cfg.stepping.sample_every, |n| {
        if *n >= 1 { Ok(()) } else { Err("sample_every must be at least 1".into()) }
    })?;
    apply(text, st.blowup_threshold, &mut cfg.stepping.blowup_threshold, |b| {
        if *b >= 1e3 { Ok(()) } else { Err(format!("blowup_threshold must be >= 1e3, got {b}")) }
    })?;
    let dt_min_line = st.dt_min.as_ref().map(|v| line_of(text, v.span()));
    apply(text, st.dt_min, &mut cfg.stepping.dt_min, positive("dt_min"))?;
    apply(text, st.decay_threshold, &mut cfg.stepping.decay_threshold, positive("decay_threshold"))?;
    if cfg.stepping.dt_min > cfg.stepping.dt {
        return Err(Error::Config {
            line: dt_min_line.unwrap_or(0),
            message: format!("dt_min = {} exceeds dt = {}", cfg.stepping.dt_min, cfg.stepping.dt),
        });
    }

    let ex = raw.experiment.unwrap_or_default();
    apply(text, ex.kind, &mut cfg.experiment.kind, any)?;
    let e = &mut cfg.experiment;
    let check = |f: fn(&mut ExperimentSettings, Vec<f64>)| {
        move |v: &Vec<f64>| {
            let mut probe = RunConfig::default().experiment;
            f(&mut probe, v.clone());
            validate_experiment(&probe)
        }
    };
    apply(text, ex.q_list, &mut e.q_list, check(|e, v| e.q_list = v))?;
    apply(text, ex.fit_window, &mut e.fit_window, check(|e, v| e.fit_window = v))?;
    apply(text, ex.p_list, &mut e.p_list, check(|e, v| e.p_list = v))?;
    apply(text, ex.amplitudes, &mut e.amplitudes, check(|e, v| e.amplitudes = v))?;
    apply(text, ex.csv, &mut e.csv, any)?;
    apply(text, ex.json, &mut e.json, any)?;

    // Cross-field constraints (grid resolution against dimension and radius).
    cfg.validate().map_err(|err| Error::Config { line: 0, message: err.to_string() })?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}
