//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use crowdsignal::model::{validate_config, Belief, ValidatedConfig, WorkerMode, WorkerPopulation};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SOLVE_GRID_STEP: f64 = 0.01;
pub const DEFAULT_SWEEP_GRID_STEP: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    #[default]
    Strategic,
    Naive,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<WorkerMode> {
        match self {
            ModeSelection::Strategic => vec![WorkerMode::Strategic],
            ModeSelection::Naive => vec![WorkerMode::Naive],
            ModeSelection::Both => vec![WorkerMode::Naive, WorkerMode::Strategic],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    NWorkers,
    KHigh,
    KLow,
    PHigh,
    PLow,
    EffortCost,
    MuHigh,
    Beta,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::NWorkers => "n_workers",
            Param::KHigh => "k_high",
            Param::KLow => "k_low",
            Param::PHigh => "p_high",
            Param::PLow => "p_low",
            Param::EffortCost => "effort_cost",
            Param::MuHigh => "mu_high",
            Param::Beta => "beta",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, Param::NWorkers | Param::KHigh | Param::KLow)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One swept parameter: either an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let bad = |msg: String| CliError::Input(format!("sweep axis {}: {msg}", self.param));
        let points = match (self.start, self.stop, self.step, &self.values) {
            (None, None, None, Some(values)) => values.clone(),
            (Some(start), Some(stop), Some(step), None) => {
                if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                    return Err(bad(format!("step must be positive and finite, got {step}")));
                }
                if stop < start {
                    return Err(bad(format!("empty range: stop {stop} < start {start}")));
                }
                let span = stop - start;
                let n = (span / step).round();
                if (n * step - span).abs() > 1e-9 * span.abs().max(1.0) {
                    return Err(bad(format!(
                        "step {step} does not divide [{start}, {stop}]"
                    )));
                }
                (0..=n as usize)
                    .map(|i| round_sig(start + i as f64 * step))
                    .collect()
            }
            _ => {
                return Err(bad(
                    "give either `values` or all of `start`, `stop`, `step`".to_string(),
                ))
            }
        };
        if points.is_empty() {
            return Err(bad("no points".to_string()));
        }
        for &v in &points {
            if !v.is_finite() {
                return Err(bad(format!("non-finite value {v}")));
            }
            if self.param.is_count() && (v < 0.0 || v.fract() != 0.0) {
                return Err(bad(format!("{v} is not a worker count")));
            }
        }
        Ok(points)
    }
}

/// Rounds to 12 significant digits, removing accumulation noise from
/// `start + i * step`.
fn round_sig(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_workers: usize,
    pub k_high: usize,
    pub k_low: usize,
    pub p_high: f64,
    pub p_low: f64,
    pub effort_cost: f64,
    pub mu_high: f64,
    pub beta: f64,
    #[serde(default)]
    pub mode: ModeSelection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let text = match name {
        "fig2" => include_str!("../presets/fig2.json"),
        "fig3" => include_str!("../presets/fig3.json"),
        other => return Err(CliError::Input(format!("unknown preset `{other}`"))),
    };
    parse(text, name)
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

fn parse(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("{origin}: {e}")))
}

impl ExperimentConfig {
    pub fn population(&self) -> WorkerPopulation {
        WorkerPopulation {
            n_workers: self.n_workers,
            k_high: self.k_high,
            k_low: self.k_low,
            p_high: self.p_high,
            p_low: self.p_low,
            effort_cost: self.effort_cost,
        }
    }

    /// Model-level validation for one worker mode.
    pub fn validated(&self, mode: WorkerMode) -> Result<ValidatedConfig, CliError> {
        let prior = Belief {
            mu_high: self.mu_high,
            mu_low: 1.0 - self.mu_high,
        };
        validate_config(self.population(), prior, self.beta, mode)
            .map_err(|e| CliError::Input(e.to_string()))
    }

    /// Validates the configuration for every selected mode.
    pub fn check(&self) -> Result<(), CliError> {
        for mode in self.mode.modes() {
            self.validated(mode)?;
        }
        if self.trials == Some(0) {
            return Err(CliError::Input("trials must be at least 1".to_string()));
        }
        Ok(())
    }

    pub fn with_param(&self, param: Param, value: f64) -> ExperimentConfig {
        let mut c = self.clone();
        match param {
            Param::NWorkers => c.n_workers = value as usize,
            Param::KHigh => c.k_high = value as usize,
            Param::KLow => c.k_low = value as usize,
            Param::PHigh => c.p_high = value,
            Param::PLow => c.p_low = value,
            Param::EffortCost => c.effort_cost = value,
            Param::MuHigh => c.mu_high = value,
            Param::Beta => c.beta = value,
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(start: f64, stop: f64, step: f64) -> Axis {
        Axis {
            param: Param::PHigh,
            start: Some(start),
            stop: Some(stop),
            step: Some(step),
            values: None,
        }
    }

    #[test]
    fn range_points_are_clean() {
        let p = axis(0.7, 0.8, 0.02).points().unwrap();
        assert_eq!(p, vec![0.7, 0.72, 0.74, 0.76, 0.78, 0.8]);
        assert!(axis(0.8, 0.7, 0.02).points().is_err());
        assert!(axis(0.7, 0.8, 0.03).points().is_err());
        assert!(axis(0.7, 0.8, 0.0).points().is_err());
    }

    #[test]
    fn presets_parse_and_validate() {
        for name in ["fig2", "fig3"] {
            let c = preset(name).unwrap();
            c.check().unwrap();
            assert_eq!(c.family.unwrap().points().unwrap(), vec![50.0, 70.0]);
        }
        assert_eq!(
            preset("fig2")
                .unwrap()
                .sweep
                .unwrap()
                .points()
                .unwrap()
                .len(),
            6
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = include_str!("../presets/fig2.json").replace("\"beta\"", "\"betta\"");
        assert!(parse(&text, "t").is_err());
    }

    #[test]
    fn count_axis_needs_integers() {
        let a = Axis {
            param: Param::KHigh,
            start: None,
            stop: None,
            step: None,
            values: Some(vec![50.5]),
        };
        assert!(a.points().is_err());
    }
}
