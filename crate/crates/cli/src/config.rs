//! Experiment configuration: command-line flags layered over an optional
//! TOML file (or the `config` object of a previous run manifest).

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ensemble_core::{EnsembleSpec, LearningRule, Schedule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Learning rates used wherever a figure or sweep does not name its own.
pub const DEFAULT_ETAS: [f64; 5] = [0.1, 0.2, 0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Theory,
    Simulate,
    Compare,
    Sweep,
    Validate,
    MinError,
    Figure,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Theory => "theory",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
            Mode::MinError => "min-error",
            Mode::Figure => "figure",
        }
    }
}

/// Every setting is optional here; unset values fall back to the config file
/// and then to per-mode defaults.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Learning rule: hebbian or perceptron.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<LearningRule>,

    /// Learning rate(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,

    /// Number of ensemble teachers, comma separated for sweeps.
    #[arg(long = "K", value_delimiter = ',')]
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,

    /// Teacher-teacher direction cosine(s), comma separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,

    /// Teacher-truth direction cosine.
    #[arg(long = "RB")]
    #[serde(default, rename = "RB", skip_serializing_if = "Option::is_none")]
    pub r_b: Option<f64>,

    /// RK4 step size.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,

    /// Final normalized time.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,

    /// Interval between recorded samples.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_every: Option<f64>,

    /// Input dimension of the simulation.
    #[arg(long = "N")]
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// Number of simulation seeds.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<u64>,

    /// Base seed; runs use seed, seed + 1, ...
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Teacher schedule: round-robin or random.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,

    /// Fresh test inputs per empirical error measurement (0 disables it).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_inputs: Option<usize>,

    /// Monte Carlo samples per oracle estimate.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Settings {
    /// Fills every unset field from `base`.
    pub fn or(self, base: Settings) -> Settings {
        Settings {
            rule: self.rule.or(base.rule),
            eta: self.eta.or(base.eta),
            k: self.k.or(base.k),
            q: self.q.or(base.q),
            r_b: self.r_b.or(base.r_b),
            dt: self.dt.or(base.dt),
            tmax: self.tmax.or(base.tmax),
            measure_every: self.measure_every.or(base.measure_every),
            n: self.n.or(base.n),
            seeds: self.seeds.or(base.seeds),
            seed: self.seed.or(base.seed),
            schedule: self.schedule.or(base.schedule),
            test_inputs: self.test_inputs.or(base.test_inputs),
            samples: self.samples.or(base.samples),
            out: self.out.or(base.out),
        }
    }
}

/// Contents of a config file: the settings plus, for `run`, the mode.
#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    pub figure: Option<String>,
    pub settings: Settings,
}

/// Reads a TOML config, or the `config` object of a JSON run manifest.
pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let invalid = |e: &dyn std::fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut value: serde_json::Value = if is_json {
        let mut manifest: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| invalid(&e))?;
        manifest
            .get_mut("config")
            .map(serde_json::Value::take)
            .ok_or_else(|| invalid(&"no `config` object"))?
    } else {
        toml::from_str(&text).map_err(|e| invalid(&e))?
    };
    let table = value
        .as_object_mut()
        .ok_or_else(|| invalid(&"expected a table of settings"))?;
    let mode = table
        .remove("mode")
        .map(serde_json::from_value)
        .transpose()
        .map_err(|e| invalid(&e))?;
    let figure = table
        .remove("figure")
        .map(serde_json::from_value)
        .transpose()
        .map_err(|e| invalid(&e))?;
    let settings = serde_json::from_value(value).map_err(|e| invalid(&e))?;
    Ok(ConfigFile {
        mode,
        figure,
        settings,
    })
}

/// Fully resolved, validated configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    pub rule: LearningRule,
    pub eta: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    pub q: Vec<f64>,
    #[serde(rename = "RB")]
    pub r_b: f64,
    pub dt: f64,
    pub tmax: f64,
    pub measure_every: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seeds: u64,
    pub seed: u64,
    pub schedule: Schedule,
    pub test_inputs: usize,
    pub samples: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn resolve(mode: Mode, figure: Option<String>, s: Settings) -> Result<Self, CliError> {
        let rule = s.rule.unwrap_or(match mode {
            Mode::MinError => LearningRule::Perceptron,
            _ => LearningRule::Hebbian,
        });
        let long_run =
            rule == LearningRule::Perceptron && matches!(mode, Mode::Sweep | Mode::MinError);
        let default_eta = match mode {
            Mode::Sweep | Mode::MinError => DEFAULT_ETAS.to_vec(),
            Mode::Validate => vec![1.0],
            _ if rule == LearningRule::Perceptron => vec![0.2],
            _ => vec![1.0],
        };
        let default_tmax = match mode {
            Mode::Simulate | Mode::Compare => 20.0,
            _ if long_run => 200.0,
            _ => 50.0,
        };
        let cfg = Self {
            mode,
            figure,
            rule,
            eta: s.eta.unwrap_or(default_eta),
            k: s.k.unwrap_or_else(|| vec![10]),
            q: s.q.unwrap_or_else(|| vec![0.49]),
            r_b: s.r_b.unwrap_or(0.7),
            dt: s.dt.unwrap_or(1e-3),
            tmax: s.tmax.unwrap_or(default_tmax),
            measure_every: s.measure_every.unwrap_or(if long_run { 0.1 } else { 0.5 }),
            n: s.n.unwrap_or(2000),
            seeds: s.seeds.unwrap_or(5),
            seed: s.seed.unwrap_or(0),
            schedule: s.schedule.unwrap_or(Schedule::RoundRobin),
            test_inputs: s
                .test_inputs
                .unwrap_or(if mode == Mode::Compare { 10_000 } else { 0 }),
            samples: s.samples.unwrap_or(1_000_000),
            out: s.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every numeric range and every geometry before any work starts.
    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.eta.is_empty() || self.k.is_empty() || self.q.is_empty() {
            return bad("eta, K and q need at least one value".into());
        }
        if let Some(eta) = self.eta.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return bad(format!("eta = {eta} must be finite and >= 0"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be > 0", self.dt));
        }
        if !(self.tmax.is_finite() && self.tmax >= 0.0) {
            return bad(format!("tmax = {} must be >= 0", self.tmax));
        }
        if !(self.measure_every.is_finite() && self.measure_every > 0.0) {
            return bad(format!(
                "measure-every = {} must be > 0",
                self.measure_every
            ));
        }
        if self.n == 0 || self.seeds == 0 || self.samples < 2 {
            return bad("N and seeds must be >= 1, samples >= 2".into());
        }
        let single = matches!(self.mode, Mode::Theory | Mode::Simulate | Mode::Compare);
        if single && (self.eta.len() > 1 || self.k.len() > 1 || self.q.len() > 1) {
            return bad(format!(
                "{} takes a single eta, K and q; use sweep for lists",
                self.mode.name()
            ));
        }
        for &k in &self.k {
            for &q in &self.q {
                EnsembleSpec {
                    k,
                    r_b: self.r_b,
                    q,
                    seed: 0,
                }
                .validate()?;
            }
        }
        Ok(())
    }

    pub fn eta0(&self) -> f64 {
        self.eta[0]
    }

    pub fn k0(&self) -> usize {
        self.k[0]
    }

    pub fn q0(&self) -> f64 {
        self.q[0]
    }
}
