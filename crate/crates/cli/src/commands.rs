//! `solve` and `sweep`.

use std::path::PathBuf;

use crowdsignal::beliefs::CaseProbabilities;
use crowdsignal::model::{Announcement, RevelationStrategy, State, WorkerMode};
use crowdsignal::platform::{self, ScenarioPayoff, Welfare, CASES};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Param, DEFAULT_SOLVE_GRID_STEP, DEFAULT_SWEEP_GRID_STEP};
use crate::output::{self, fmt_num, Header};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub state: State,
    pub announcement: Announcement,
    pub probability: f64,
    /// `null` when the case cannot occur.
    pub scenario: Option<ScenarioPayoff>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub mode: WorkerMode,
    pub grid_step: f64,
    pub eps_star: RevelationStrategy,
    pub expected_payoff: f64,
    pub case_probs: CaseProbabilities,
    pub cases: Vec<CaseRecord>,
    pub welfare: Welfare,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveRecord {
    #[serde(flatten)]
    pub header: Header,
    pub config: ExperimentConfig,
    pub solutions: Vec<Solution>,
}

pub fn solve_one(
    config: &ExperimentConfig,
    mode: WorkerMode,
    grid_step: f64,
) -> Result<Solution, CliError> {
    let v = config.validated(mode)?;
    let outcome = platform::optimize_revelation(&v.prior, &v.pop, v.beta, mode, grid_step)
        .map_err(CliError::from_core)?;
    let cases = CASES
        .into_iter()
        .map(|(state, announcement)| CaseRecord {
            state,
            announcement,
            probability: outcome.case_probs.get(state, announcement),
            scenario: outcome.case_payoffs.get(state, announcement).copied(),
        })
        .collect();
    Ok(Solution {
        mode,
        grid_step,
        eps_star: outcome.eps_star,
        expected_payoff: outcome.expected_payoff,
        case_probs: outcome.case_probs,
        cases,
        welfare: platform::welfare(&outcome.eval(), &v.pop),
    })
}

pub fn solve(config: &ExperimentConfig) -> Result<(), CliError> {
    config.check()?;
    let grid_step = config.grid_step.unwrap_or(DEFAULT_SOLVE_GRID_STEP);
    let solutions = config
        .mode
        .modes()
        .into_iter()
        .map(|mode| solve_one(config, mode, grid_step))
        .collect::<Result<Vec<_>, _>>()?;
    let record = SolveRecord {
        header: Header::current(),
        config: embedded(config),
        solutions,
    };
    emit(
        config.out_dir.as_ref(),
        "solution.json",
        output::to_json(&record)?,
    )
}

/// The configuration as embedded in records: the output location is not
/// part of the experiment.
fn embedded(config: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        out_dir: None,
        ..config.clone()
    }
}

fn emit(out_dir: Option<&PathBuf>, name: &str, contents: String) -> Result<(), CliError> {
    match out_dir {
        Some(dir) => output::write_file(dir, name, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct SweepMeta {
    #[serde(flatten)]
    header: Header,
    config: ExperimentConfig,
    grid_step: f64,
    columns: Vec<String>,
    rows: usize,
}

const CASE_TAGS: [&str; 4] = ["hh", "hl", "lh", "ll"];

fn columns(sweep: Param, family: Option<Param>) -> Vec<String> {
    let mut cols = vec![sweep.name().to_string()];
    if let Some(f) = family {
        cols.push(f.name().to_string());
    }
    for c in [
        "mode",
        "eps_h_star",
        "eps_l_star",
        "platform_payoff",
        "aggregate_worker_payoff",
        "social_welfare",
    ] {
        cols.push(c.to_string());
    }
    for tag in CASE_TAGS {
        cols.push(format!("reward_{tag}"));
    }
    for tag in CASE_TAGS {
        cols.push(format!("sne_{tag}"));
    }
    cols
}

struct Point {
    sweep_value: f64,
    family_value: Option<f64>,
    mode: WorkerMode,
    config: ExperimentConfig,
}

pub fn sweep(config: &ExperimentConfig) -> Result<(), CliError> {
    let axis = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Input("config has no `sweep` section".to_string()))?;
    let sweep_values = axis.points()?;
    let family_values: Vec<Option<f64>> = match &config.family {
        Some(f) => f.points()?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let grid_step = config.grid_step.unwrap_or(DEFAULT_SWEEP_GRID_STEP);

    // Row order: sweep value, then family value, then mode.
    let mut points = Vec::new();
    for &s in &sweep_values {
        for &f in &family_values {
            let mut c = config.with_param(axis.param, s);
            if let (Some(v), Some(fam)) = (f, &config.family) {
                c = c.with_param(fam.param, v);
            }
            for mode in config.mode.modes() {
                c.validated(mode).map_err(|e| {
                    CliError::Input(format!("sweep point {}={}: {e}", axis.param, fmt_num(s)))
                })?;
                points.push(Point {
                    sweep_value: s,
                    family_value: f,
                    mode,
                    config: c.clone(),
                });
            }
        }
    }

    let solutions: Vec<Solution> = points
        .par_iter()
        .map(|p| solve_one(&p.config, p.mode, grid_step))
        .collect::<Result<_, _>>()?;

    let cols = columns(axis.param, config.family.as_ref().map(|f| f.param));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&cols)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    for (p, sol) in points.iter().zip(&solutions) {
        let mut row = vec![fmt_num(p.sweep_value)];
        if let Some(f) = p.family_value {
            row.push(fmt_num(f));
        }
        row.push(mode_name(p.mode).to_string());
        row.push(fmt_num(sol.eps_star.eps_h));
        row.push(fmt_num(sol.eps_star.eps_l));
        row.push(fmt_num(sol.expected_payoff));
        row.push(fmt_num(sol.welfare.aggregate_worker_payoff));
        row.push(fmt_num(sol.welfare.social_welfare));
        for case in &sol.cases {
            row.push(
                case.scenario
                    .map(|s| fmt_num(s.design.r_star))
                    .unwrap_or_default(),
            );
        }
        for case in &sol.cases {
            row.push(
                case.scenario
                    .map(|s| s.equilibrium.label().to_string())
                    .unwrap_or_default(),
            );
        }
        w.write_record(&row)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let csv_bytes = w
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let csv_text = String::from_utf8(csv_bytes).map_err(|e| CliError::Internal(e.to_string()))?;

    match &config.out_dir {
        Some(dir) => {
            output::write_file(dir, "sweep.csv", csv_text.as_bytes())?;
            let meta = SweepMeta {
                header: Header::current(),
                config: embedded(config),
                grid_step,
                columns: cols,
                rows: solutions.len(),
            };
            output::write_file(dir, "sweep.meta.json", output::to_json(&meta)?.as_bytes())
        }
        None => {
            print!("{csv_text}");
            Ok(())
        }
    }
}

pub fn mode_name(mode: WorkerMode) -> &'static str {
    match mode {
        WorkerMode::Strategic => "strategic",
        WorkerMode::Naive => "naive",
    }
}
