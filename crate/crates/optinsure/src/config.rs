//! TOML run configuration. The schema is documented in `docs/config.md`.

use std::path::{Path, PathBuf};

use optinsure_core::{ModelParams, StepFunction, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::montecarlo::{Dynamics, Measure, SimConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid {key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.to_string(),
    }
}

/// A rate or level that is either constant or piecewise constant in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Constant(f64),
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
}

impl StepSpec {
    fn to_function(&self, key: &str) -> Result<StepFunction, ConfigError> {
        match self {
            Self::Constant(v) => Ok(StepFunction::constant(*v)),
            Self::Piecewise { breaks, values } => {
                StepFunction::new(breaks.clone(), values.clone()).map_err(|e| invalid(key, e))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub r: f64,
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub alpha: f64,
    pub delta: f64,
    pub horizon: f64,
    #[serde(default = "default_initial_wealth")]
    pub initial_wealth: f64,
    pub lambda: StepSpec,
    pub income: StepSpec,
}

fn default_initial_wealth() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Grid steps on [0, T] for the HJB tables and `closed_form.csv`.
    pub n_steps: usize,
    /// Premiums up to which J(ζ(θ)) is checked to decrease.
    pub theta_max: f64,
    /// Premiums for `hjb.csv`, `indifference.csv` and the utility checks.
    pub thetas: Vec<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            n_steps: 10_000,
            theta_max: 2.0,
            thetas: vec![0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n_paths: usize,
    /// Time step in years.
    pub dt: f64,
    pub seed: u64,
    /// 0 uses one worker per core.
    pub workers: usize,
    pub brownian_substeps: usize,
    /// Added to μ in simulated dynamics only.
    pub drift_shift: f64,
    /// Defaults to T/4, T/2, T.
    pub martingale_times: Option<Vec<f64>>,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt: 1e-3,
            seed: 42,
            workers: 0,
            brownian_substeps: 1,
            drift_shift: 0.0,
            martingale_times: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub thetas: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    /// Wealth levels reported in `figure1b.csv`.
    pub x_values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            thetas: (0..=20).map(|k| k as f64 / 10.0).collect(),
            x_min: 0.0,
            x_max: 10.0,
            x_points: 101,
            x_values: vec![0.0, 5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub thetas: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            message: e.message().to_string(),
        })?;
        config.check()?;
        Ok(config)
    }

    /// Applies overrides; the θ list replaces `sweep.thetas` when
    /// `for_sweep` is set and `solver.thetas` otherwise.
    pub fn apply(&mut self, o: &Overrides, for_sweep: bool) -> Result<(), ConfigError> {
        if let Some(seed) = o.seed {
            self.mc.seed = seed;
        }
        if let Some(paths) = o.paths {
            self.mc.n_paths = paths;
        }
        if let Some(dt) = o.dt {
            self.mc.dt = dt;
        }
        if let Some(thetas) = &o.thetas {
            if for_sweep {
                self.sweep.thetas = thetas.clone();
            } else {
                self.solver.thetas = thetas.clone();
            }
        }
        self.check()
    }

    fn check(&self) -> Result<(), ConfigError> {
        self.model_params()?;
        if self.solver.n_steps == 0 {
            return Err(invalid("solver.n_steps", "must be at least 1"));
        }
        if !(self.solver.theta_max > 0.0 && self.solver.theta_max.is_finite()) {
            return Err(invalid("solver.theta_max", "must be positive"));
        }
        for (key, list) in [("solver.thetas", &self.solver.thetas), ("sweep.thetas", &self.sweep.thetas)] {
            if list.is_empty() {
                return Err(invalid(key, "must not be empty"));
            }
            if let Some(bad) = list.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
                return Err(invalid(key, format!("premium {bad} must be finite and nonnegative")));
            }
        }
        if self.mc.n_paths < 2 {
            return Err(invalid("mc.n_paths", "must be at least 2"));
        }
        if !(self.mc.dt > 0.0 && self.mc.dt <= self.model.horizon) {
            return Err(invalid("mc.dt", "must lie in (0, horizon]"));
        }
        if self.mc.brownian_substeps == 0 {
            return Err(invalid("mc.brownian_substeps", "must be at least 1"));
        }
        if !self.mc.drift_shift.is_finite() {
            return Err(invalid("mc.drift_shift", "must be finite"));
        }
        if !(self.sweep.x_min <= self.sweep.x_max) || self.sweep.x_points < 2 {
            return Err(invalid("sweep", "need x_min <= x_max and x_points >= 2"));
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        let m = &self.model;
        ModelParams {
            r: m.r,
            mu: m.mu,
            sigma: m.sigma,
            rho: m.rho,
            alpha: m.alpha,
            delta: m.delta,
            horizon: m.horizon,
            initial_wealth: m.initial_wealth,
            mortality: m.lambda.to_function("model.lambda")?,
            income: m.income.to_function("model.income")?,
        }
        .validate()
        .map_err(|e| invalid("model", e))
    }

    pub fn sim_config(&self, measure: Measure, dynamics: Dynamics) -> Result<SimConfig, ConfigError> {
        let grid = TimeGrid::with_step(self.model.horizon, self.mc.dt).map_err(|e| invalid("mc.dt", e))?;
        Ok(SimConfig {
            brownian_substeps: self.mc.brownian_substeps,
            drift_shift: self.mc.drift_shift,
            workers: self.mc.workers,
            ..SimConfig::new(self.mc.n_paths, grid, self.mc.seed)
                .with_measure(measure)
                .with_dynamics(dynamics)
        })
    }

    pub fn martingale_times(&self) -> Vec<f64> {
        let t = self.model.horizon;
        self.mc
            .martingale_times
            .clone()
            .unwrap_or_else(|| vec![0.25 * t, 0.5 * t, t])
    }

    /// The configuration after overrides, as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unserialisable config: {e}\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [model]
        r = 0.2
        mu = 0.3
        sigma = 0.25
        rho = 0.2
        alpha = 0.5
        delta = 100.0
        horizon = 10.0
        lambda = 0.01
        income = 10.0
    "#;

    #[test]
    fn minimal_config_matches_baseline() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.model_params().unwrap(), ModelParams::baseline());
        assert_eq!(c.mc.seed, 42);
    }

    #[test]
    fn missing_key_is_named() {
        let text = BASE.replace("alpha = 0.5", "");
        let msg = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("alpha"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{BASE}\n[mc]\nseeds = 3\n");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn piecewise_lambda() {
        let text = BASE.replace("lambda = 0.01", "lambda = { breaks = [5.0], values = [0.01, 0.03] }");
        let p = RunConfig::parse(&text).unwrap().model_params().unwrap();
        assert_eq!(p.mortality.value_at(6.0), 0.03);
    }

    #[test]
    fn invalid_model_value_reported() {
        let text = BASE.replace("sigma = 0.25", "sigma = 0.0");
        let msg = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("sigma must be positive"), "{msg}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = RunConfig::parse(BASE).unwrap();
        let o = Overrides {
            seed: Some(7),
            paths: Some(10),
            dt: Some(0.5),
            thetas: Some(vec![0.5]),
        };
        c.apply(&o, true).unwrap();
        assert_eq!((c.mc.seed, c.mc.n_paths, c.mc.dt), (7, 10, 0.5));
        assert_eq!(c.sweep.thetas, vec![0.5]);
        assert_eq!(c.solver.thetas, vec![0.0, 1.0]);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }
}
