//! Experiment configuration, read from TOML or JSON.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fleming_viot::StationaryConfig;
use crate::killed::MIN_ENSEMBLE;
use crate::nbbm::MAX_DT;
use crate::sampler::InitialLaw;
use crate::stats::MIN_BATCHES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FvStationary,
    FvSweep,
    Yaglom,
    Survival,
    NbbmSpeed,
    NbbmProfile,
    QsdTable,
    ValidateKernel,
    GreenCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::FvStationary,
        ExperimentKind::FvSweep,
        ExperimentKind::Yaglom,
        ExperimentKind::Survival,
        ExperimentKind::NbbmSpeed,
        ExperimentKind::NbbmProfile,
        ExperimentKind::QsdTable,
        ExperimentKind::ValidateKernel,
        ExperimentKind::GreenCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::FvStationary => "fv-stationary",
            ExperimentKind::FvSweep => "fv-sweep",
            ExperimentKind::Yaglom => "yaglom",
            ExperimentKind::Survival => "survival",
            ExperimentKind::NbbmSpeed => "nbbm-speed",
            ExperimentKind::NbbmProfile => "nbbm-profile",
            ExperimentKind::QsdTable => "qsd-table",
            ExperimentKind::ValidateKernel => "validate-kernel",
            ExperimentKind::GreenCheck => "green-check",
        }
    }

    fn uses_fv(self) -> bool {
        matches!(
            self,
            ExperimentKind::FvStationary | ExperimentKind::FvSweep | ExperimentKind::GreenCheck
        )
    }

    fn uses_nbbm(self) -> bool {
        matches!(self, ExperimentKind::NbbmSpeed | ExperimentKind::NbbmProfile)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.as_str()).collect();
                Error::Config(format!("unknown experiment {s:?}, expected one of {}", names.join(", ")))
            })
    }
}

/// One particle count or several.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    One(usize),
    Many(Vec<usize>),
}

impl Counts {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Counts::One(n) => vec![*n],
            Counts::Many(ns) => ns.clone(),
        }
    }
}

/// Test functions for the Green identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Zero,
    One,
    /// `e^{-x}`
    Exp,
}

impl TestFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::Zero => 0.0,
            TestFunction::One => 1.0,
            TestFunction::Exp => (-x).exp(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestFunction::Zero => "zero",
            TestFunction::One => "one",
            TestFunction::Exp => "exp",
        }
    }
}

fn default_counts() -> Counts {
    Counts::One(100)
}
fn default_dt() -> f64 {
    1e-3
}
fn default_horizon() -> f64 {
    500.0
}
fn default_initial() -> InitialLaw {
    InitialLaw::Qsd(0.5)
}
fn default_replicas() -> usize {
    1
}
fn default_batches() -> usize {
    25
}
fn default_sample_every() -> f64 {
    0.1
}
fn default_stride() -> usize {
    1
}
fn default_times() -> Vec<f64> {
    vec![2.0, 5.0, 10.0]
}
fn default_ensemble() -> usize {
    1_000_000
}
fn default_lambdas() -> Vec<f64> {
    vec![0.125, 0.25, 0.375, 0.5]
}
fn default_x0() -> f64 {
    1.0
}
fn default_paths() -> usize {
    1_000_000
}
fn default_bias_x0() -> f64 {
    0.5
}
fn default_bias_dt() -> f64 {
    0.01
}
fn default_functions() -> Vec<TestFunction> {
    vec![TestFunction::One, TestFunction::Exp]
}

/// Every knob of every experiment; each experiment reads the fields it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default = "default_counts")]
    pub n_particles: Counts,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Defaults to `max(0.1 horizon, 20)`.
    #[serde(default)]
    pub burn_in: Option<f64>,
    #[serde(default = "default_initial")]
    pub initial: InitialLaw,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,

    #[serde(default = "default_batches")]
    pub n_batches: usize,
    #[serde(default = "default_sample_every")]
    pub sample_every: f64,
    #[serde(default = "default_stride")]
    pub varpi_stride: usize,
    /// Also run every system at `dt / 2`.
    #[serde(default)]
    pub richardson: bool,
    #[serde(default = "default_functions")]
    pub test_functions: Vec<TestFunction>,

    /// Observation times for conditioned ensembles and kernel survival.
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,

    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,

    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_bias_x0")]
    pub bias_x0: f64,
    #[serde(default = "default_bias_dt")]
    pub bias_dt: f64,

    /// Trailing window of the front-speed fit; defaults to half the horizon.
    #[serde(default)]
    pub fit_window: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text is a JSON object.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let json = text.trim_start().starts_with('{');
        let parsed = if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::Config(format!("{origin}: {}", e.trim_end())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment
            .ok_or_else(|| Error::Config("field `experiment` is not set".into()))
    }

    pub fn resolved_burn_in(&self) -> f64 {
        self.burn_in.unwrap_or_else(|| (0.1 * self.horizon).max(20.0))
    }

    pub fn fit_window(&self) -> f64 {
        self.fit_window.unwrap_or(0.5 * self.horizon)
    }

    pub fn output_dir(&self) -> PathBuf {
        match (&self.output_dir, self.experiment) {
            (Some(dir), _) => dir.clone(),
            (None, Some(kind)) => PathBuf::from("runs").join(kind.as_str()),
            (None, None) => PathBuf::from("runs"),
        }
    }

    /// Fills in every default that depends on other fields.
    pub fn resolved(&self) -> Result<Self> {
        let kind = self.kind()?;
        let mut c = self.clone();
        c.output_dir = Some(self.output_dir());
        if kind.uses_fv() || kind.uses_nbbm() {
            c.burn_in = Some(self.resolved_burn_in());
        }
        if kind == ExperimentKind::NbbmSpeed {
            c.fit_window = Some(self.fit_window());
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        let bad = |field: &str, msg: String| Err(Error::Config(format!("field `{field}`: {msg}")));
        if self.replicas == 0 {
            return bad("replicas", "must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("{} must be positive", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon", format!("{} must be positive", self.horizon));
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0 && self.horizon > b) {
                return bad("burn_in", format!("need horizon > burn_in >= 0, got {b}"));
            }
        }
        if let Err(e) = self.initial.validate() {
            return bad("initial", e.to_string());
        }
        let counts = self.n_particles.values();
        if counts.is_empty() {
            return bad("n_particles", "empty list".into());
        }
        if kind.uses_fv() || kind.uses_nbbm() {
            if let Some(n) = counts.iter().find(|&&n| n < 2) {
                return bad("n_particles", format!("{n} is below 2"));
            }
            if self.resolved_burn_in() <= 0.0 && kind.uses_fv() {
                return bad("burn_in", "must be positive".into());
            }
        }
        if kind.uses_fv() {
            if self.n_batches < MIN_BATCHES {
                return bad("n_batches", format!("{} is below {MIN_BATCHES}", self.n_batches));
            }
            if !(self.sample_every > 0.0) {
                return bad("sample_every", "must be positive".into());
            }
            if self.varpi_stride == 0 {
                return bad("varpi_stride", "must be at least 1".into());
            }
        }
        if kind.uses_nbbm() {
            if self.dt > MAX_DT {
                return bad("dt", format!("N-BBM steps must not exceed {MAX_DT}"));
            }
            if !(self.sample_every > 0.0) {
                return bad("sample_every", "must be positive".into());
            }
        }
        if kind == ExperimentKind::NbbmSpeed {
            let w = self.fit_window();
            if !(w > 0.0 && 2.0 * w <= self.horizon) {
                return bad("fit_window", format!("{w} must be positive and at most half the horizon"));
            }
        }
        if matches!(
            kind,
            ExperimentKind::Yaglom | ExperimentKind::Survival | ExperimentKind::ValidateKernel
        ) {
            if self.times.is_empty() || !(self.times[0] > 0.0) {
                return bad("times", "need at least one positive time".into());
            }
            if self.times.windows(2).any(|w| !(w[1] > w[0])) {
                return bad("times", "must be strictly increasing".into());
            }
        }
        if matches!(kind, ExperimentKind::Yaglom | ExperimentKind::Survival) && self.ensemble < MIN_ENSEMBLE {
            return bad("ensemble", format!("{} is below {MIN_ENSEMBLE}", self.ensemble));
        }
        if kind == ExperimentKind::QsdTable {
            if self.lambdas.is_empty() {
                return bad("lambdas", "empty list".into());
            }
            if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && **l <= 0.5)) {
                return bad("lambdas", format!("{l} is outside (0, 1/2]"));
            }
        }
        if kind == ExperimentKind::ValidateKernel {
            if self.paths < 2 {
                return bad("paths", "need at least 2".into());
            }
            for (field, x) in [("x0", self.x0), ("bias_x0", self.bias_x0), ("bias_dt", self.bias_dt)] {
                if !(x > 0.0 && x.is_finite()) {
                    return bad(field, format!("{x} must be positive"));
                }
            }
        }
        if kind == ExperimentKind::GreenCheck && self.test_functions.is_empty() {
            return bad("test_functions", "empty list".into());
        }
        Ok(())
    }

    pub(crate) fn stationary(&self, n: usize, dt: f64) -> StationaryConfig<f64> {
        StationaryConfig {
            n_particles: n,
            dt,
            horizon: self.horizon,
            burn_in: Some(self.resolved_burn_in()),
            n_batches: self.n_batches,
            sample_every: self.sample_every,
            varpi_stride: self.varpi_stride,
        }
    }
}
