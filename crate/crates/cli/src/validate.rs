//! `validate`: enumeration and Monte Carlo checks of the analytic model.

use crowdsignal::equilibrium::{self, ProfileContext, Thresholds};
use crowdsignal::model::{
    Announcement, Belief, RevelationStrategy, SneKind, State, WorkerMode, WorkerPopulation,
    WorkerStrategy, WorkerType,
};
use crowdsignal::montecarlo::{self, SimulationReport, SIGMA_BAND};
use crowdsignal::oracle;
use crowdsignal::voting::{self, others_mix};
use serde::Serialize;

use crate::config::{ExperimentConfig, DEFAULT_SEED, DEFAULT_TRIALS};
use crate::output::{self, Header};
use crate::CliError;

/// Largest difference tolerated between analytic and enumerated values.
pub const ENUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationCheck {
    pub name: String,
    pub analytic: f64,
    pub enumerated: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExistenceCheck {
    pub name: String,
    pub reward: f64,
    pub analytic: bool,
    pub brute_force: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloCheck {
    pub name: String,
    pub report: SimulationReport,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationRecord {
    #[serde(flatten)]
    pub header: Header,
    pub config: ExperimentConfig,
    pub scaled_population: WorkerPopulation,
    pub seed: u64,
    pub trials: u64,
    pub sigma_band: f64,
    pub enumeration: Vec<EnumerationCheck>,
    pub existence: Vec<ExistenceCheck>,
    pub monte_carlo: Vec<MonteCarloCheck>,
    pub passed: bool,
}

/// A copy of `pop` small enough to enumerate, keeping the parity of `N` and
/// roughly the same type proportions.
pub fn scaled_population(pop: &WorkerPopulation) -> WorkerPopulation {
    if pop.n_workers <= oracle::MAX_ENUM_WORKERS {
        return *pop;
    }
    let n = if pop.n_workers.is_multiple_of(2) {
        8
    } else {
        9
    };
    let scale = |k: usize| (k as f64 * n as f64 / pop.n_workers as f64).round() as usize;
    let k_high = scale(pop.k_high).clamp(2, n);
    let k_low = scale(pop.k_low).clamp(1, k_high - 1);
    WorkerPopulation {
        n_workers: n,
        k_high,
        k_low,
        ..*pop
    }
}

fn enumeration_checks(pop: &WorkerPopulation) -> Result<Vec<EnumerationCheck>, CliError> {
    let mut out = Vec::new();
    let mut push = |name: String, analytic: f64, enumerated: f64| {
        out.push(EnumerationCheck {
            name,
            analytic,
            enumerated,
            passed: (analytic - enumerated).abs() <= ENUM_TOL,
        });
    };
    for kind in SneKind::ALL {
        for state in State::ALL {
            let k = pop.k(state);
            let tag = format!("{}/{:?}", kind.label(), state);
            push(
                format!("accuracy {tag}"),
                voting::aggregated_accuracy(kind, k, pop).map_err(CliError::from_core)?,
                oracle::aggregated_accuracy(kind, k, pop).map_err(CliError::from_core)?,
            );
            for t in WorkerType::ALL {
                let Some(mix) = others_mix(kind, t, k, pop) else {
                    continue;
                };
                let tally = mix.tally().map_err(CliError::from_core)?;
                for s in WorkerStrategy::ALL {
                    let analytic = tally.match_prob(s.report_accuracy(pop.accuracy(t)));
                    let enumerated = oracle::profile_match_prob(t, s, kind, k, pop)
                        .map_err(CliError::from_core)?
                        .expect("type present");
                    push(format!("match {tag} {t:?} {s:?}"), analytic, enumerated);
                }
            }
        }
    }
    Ok(out)
}

fn existence_checks(
    pop: &WorkerPopulation,
    prior: &Belief,
) -> Result<Vec<ExistenceCheck>, CliError> {
    let mut out = Vec::new();
    let beliefs = [
        ("prior", *prior),
        ("high", Belief::certain(State::High)),
        ("low", Belief::certain(State::Low)),
    ];
    for (label, belief) in beliefs {
        let th = Thresholds::for_belief(belief, *pop, Announcement::High)
            .map_err(CliError::from_core)?;
        let scale = th
            .r_f
            .or(th.r_pl)
            .filter(|r| *r > 0.0)
            .unwrap_or(10.0 * pop.effort_cost.max(1.0));
        for i in 0..=12 {
            // Offset keeps the grid off the thresholds themselves.
            let reward = 3.0 * scale * (i as f64 + 0.37) / 12.0;
            for kind in SneKind::ALL {
                let ctx = ProfileContext::new(kind, belief, *pop, Announcement::High);
                let analytic = equilibrium::sne_exists(kind, reward, &th);
                let brute_force = equilibrium::verify_sne_bruteforce(kind, reward, &ctx)
                    .map_err(CliError::from_core)?;
                out.push(ExistenceCheck {
                    name: format!("{} under {label} belief", kind.label()),
                    reward,
                    analytic,
                    brute_force,
                    passed: analytic == brute_force,
                });
            }
        }
    }
    Ok(out)
}

fn monte_carlo_checks(
    pop: &WorkerPopulation,
    prior: &Belief,
    trials: u64,
    seed: u64,
) -> Result<Vec<(String, SimulationReport)>, CliError> {
    let mut out = Vec::new();
    let mut sub_seed = seed;
    let mut next_seed = || {
        sub_seed = sub_seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        sub_seed
    };
    let strategies = [
        RevelationStrategy::HONEST,
        RevelationStrategy {
            eps_h: 0.3,
            eps_l: 0.1,
        },
        RevelationStrategy {
            eps_h: 1.0,
            eps_l: 0.0,
        },
    ];
    for strat in strategies {
        let sim = montecarlo::simulate_channel(prior, &strat, trials, next_seed())
            .map_err(CliError::from_core)?;
        for (name, r) in sim.reports() {
            out.push((
                format!("channel eps=({}, {}) {name}", strat.eps_h, strat.eps_l),
                r.clone(),
            ));
        }
    }
    for kind in SneKind::ALL {
        for state in State::ALL {
            let sim = montecarlo::simulate_votes(kind, state, pop, trials, next_seed())
                .map_err(CliError::from_core)?;
            let tag = format!("{}/{:?}", kind.label(), state);
            out.push((format!("votes {tag} accuracy"), sim.accuracy));
            if let Some(r) = sim.match_high {
                out.push((format!("votes {tag} match High"), r));
            }
            if let Some(r) = sim.match_low {
                out.push((format!("votes {tag} match Low"), r));
            }
        }
    }
    Ok(out)
}

/// Runs every check. `fault` is added to each analytic Monte Carlo target,
/// which must make the run fail for any meaningful offset.
pub fn run(config: &ExperimentConfig, fault: f64) -> Result<ValidationRecord, CliError> {
    config.check()?;
    // Degenerate priors are only meaningful for naive workers.
    let mode = if config.mode.modes().contains(&WorkerMode::Strategic) {
        WorkerMode::Strategic
    } else {
        WorkerMode::Naive
    };
    let v = config.validated(mode)?;
    let seed = config.seed.unwrap_or(DEFAULT_SEED);
    let trials = config.trials.unwrap_or(DEFAULT_TRIALS);
    let small = scaled_population(&v.pop);

    let enumeration = enumeration_checks(&small)?;
    let existence = existence_checks(&small, &v.prior)?;
    let monte_carlo: Vec<MonteCarloCheck> = monte_carlo_checks(&v.pop, &v.prior, trials, seed)?
        .into_iter()
        .map(|(name, r)| {
            let report = if fault != 0.0 {
                SimulationReport::from_estimate(
                    r.trials,
                    r.empirical_value,
                    r.std_error,
                    r.analytic_value + fault,
                    r.seed,
                )
            } else {
                r
            };
            let passed = report.within(SIGMA_BAND);
            MonteCarloCheck {
                name,
                report,
                passed,
            }
        })
        .collect();
    let passed = enumeration.iter().all(|c| c.passed)
        && existence.iter().all(|c| c.passed)
        && monte_carlo.iter().all(|c| c.passed);
    Ok(ValidationRecord {
        header: Header::current(),
        config: ExperimentConfig {
            out_dir: None,
            ..config.clone()
        },
        scaled_population: small,
        seed,
        trials,
        sigma_band: SIGMA_BAND,
        enumeration,
        existence,
        monte_carlo,
        passed,
    })
}

pub fn validate(config: &ExperimentConfig, fault: f64) -> Result<(), CliError> {
    let record = run(config, fault)?;
    let text = output::to_json(&record)?;
    match &config.out_dir {
        Some(dir) => output::write_file(dir, "validation.json", text.as_bytes())?,
        None => print!("{text}"),
    }
    if record.passed {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_keeps_parity_and_order() {
        let pop = WorkerPopulation::new(100, 70, 20, 0.75, 0.6, 1.0).unwrap();
        let s = scaled_population(&pop);
        assert_eq!((s.n_workers, s.k_high, s.k_low), (8, 6, 2));
        s.validate().unwrap();
        let odd = WorkerPopulation::new(101, 100, 99, 0.75, 0.6, 1.0).unwrap();
        let s = scaled_population(&odd);
        assert_eq!(s.n_workers, 9);
        s.validate().unwrap();
    }
}
