//! JSON run configuration. Flags override file values.

use std::path::PathBuf;

use rotwave::flow::IntegratorConfig;
use rotwave::scenarios::{self, Scenario, ScenarioOverrides};
use rotwave::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub overrides: ScenarioOverrides,
    /// Sorted, non-negative bifurcation parameters.
    pub lambda_grid: Vec<f64>,
    /// Second parameter of the two-parameter families.
    pub mu: f64,
    /// Search interval for the orthogonal drift branch.
    pub mu_bracket: [f64; 2],
    /// Integration horizon in periods of the forcing.
    pub horizon: f64,
    pub samples_per_period: usize,
    pub integrator: IntegratorConfig,
    pub out: PathBuf,
    /// Seed of the randomized checks run by `verify`.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: "case1".into(),
            overrides: ScenarioOverrides::default(),
            lambda_grid: vec![0.01],
            mu: 0.0,
            mu_bracket: [0.0, 0.3],
            horizon: 5.0,
            samples_per_period: 100,
            integrator: IntegratorConfig::default(),
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    /// Parses and validates a JSON document; absent keys take defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| config_err(format!("config file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(config_err("lambda_grid is empty"));
        }
        for &l in &self.lambda_grid {
            if !(l.is_finite() && l >= 0.0) {
                return Err(config_err(format!(
                    "lambda must be finite and >= 0, got {l}"
                )));
            }
        }
        if self.lambda_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(config_err("lambda_grid must be sorted ascending"));
        }
        if !self.mu.is_finite() {
            return Err(config_err(format!("mu must be finite, got {}", self.mu)));
        }
        let [lo, hi] = self.mu_bracket;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(config_err(format!(
                "mu bracket [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        if !(self.horizon.is_finite() && self.horizon >= 1.0) {
            return Err(config_err(format!(
                "horizon must be >= 1 period, got {}",
                self.horizon
            )));
        }
        if self.samples_per_period == 0 {
            return Err(config_err("samples_per_period must be positive"));
        }
        self.integrator.validate()?;
        self.scenario().map(|_| ())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        scenarios::build(&self.scenario, &self.overrides)
    }
}
