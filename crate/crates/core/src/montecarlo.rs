//! Seeded Monte Carlo checks of the analytic probabilities.
//!
//! Trials are split over a fixed number of partitions. Partition `i` draws
//! from ChaCha8 seeded with the user seed on stream `i`, so results do not
//! depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beliefs;
use crate::equilibrium::{self, ProfileContext};
use crate::error::{Error, Result};
use crate::model::{
    Announcement, Belief, RevelationStrategy, SneKind, State, WorkerPopulation, WorkerStrategy,
    WorkerType,
};
use crate::voting::{self, others_mix};

pub const RNG_NAME: &str = "chacha8 (rand_chacha 0.3, seed_from_u64, stream = partition)";
pub const PARTITIONS: u64 = 16;
/// Band width, in standard errors, for every pass/fail decision.
pub const SIGMA_BAND: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub empirical_value: f64,
    pub analytic_value: f64,
    pub std_error: f64,
    /// `None` when the standard error is zero.
    pub z_score: Option<f64>,
    pub seed: u64,
    pub rng: String,
}

impl SimulationReport {
    /// Report for a probability estimated by `hits / trials`.
    pub fn proportion(hits: u64, trials: u64, analytic_value: f64, seed: u64) -> Self {
        let v = hits as f64 / trials as f64;
        let std_error = (v * (1.0 - v) / trials as f64).sqrt();
        Self::from_estimate(trials, v, std_error, analytic_value, seed)
    }

    pub fn from_estimate(
        trials: u64,
        empirical_value: f64,
        std_error: f64,
        analytic_value: f64,
        seed: u64,
    ) -> Self {
        let z_score = (std_error > 0.0).then(|| (empirical_value - analytic_value) / std_error);
        SimulationReport {
            trials,
            empirical_value,
            analytic_value,
            std_error,
            z_score,
            seed,
            rng: RNG_NAME.to_string(),
        }
    }

    /// Within `sigmas` standard errors. When every trial came out the same
    /// way the empirical standard error is zero, and the binomial standard
    /// error at the analytic value sets the band instead.
    pub fn within(&self, sigmas: f64) -> bool {
        match self.z_score {
            Some(z) => z.abs() <= sigmas,
            None => {
                let a = self.analytic_value;
                let band = sigmas * (a * (1.0 - a) / self.trials as f64).max(0.0).sqrt();
                (self.empirical_value - a).abs() <= band + 1e-12
            }
        }
    }
}

fn partition_rng(seed: u64, partition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(partition);
    rng
}

/// Runs `body(rng, n, counts)` on every partition and sums the counts.
fn run_partitioned<const M: usize>(
    trials: u64,
    seed: u64,
    body: impl Fn(&mut ChaCha8Rng, u64, &mut [u64; M]) + Sync,
) -> Result<[u64; M]> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let parts: Vec<[u64; M]> = (0..PARTITIONS)
        .into_par_iter()
        .map(|i| {
            let n = trials / PARTITIONS + u64::from(i < trials % PARTITIONS);
            let mut counts = [0u64; M];
            if n > 0 {
                body(&mut partition_rng(seed, i), n, &mut counts);
            }
            counts
        })
        .collect();
    let mut total = [0u64; M];
    for part in parts {
        for (t, c) in total.iter_mut().zip(part) {
            *t += c;
        }
    }
    Ok(total)
}

/// Whether a worker's report is correct: draw the estimate, then apply the
/// reporting rule.
fn report_is_correct(rng: &mut ChaCha8Rng, strategy: WorkerStrategy, accuracy: f64) -> bool {
    match strategy {
        WorkerStrategy::NoEffortRandom => rng.gen_bool(0.5),
        WorkerStrategy::EffortTruthful => rng.gen_bool(accuracy),
        WorkerStrategy::EffortUntruthful => !rng.gen_bool(accuracy),
    }
}

fn matches(own_correct: bool, others_correct: usize, others: usize) -> bool {
    let wrong = others - others_correct;
    if own_correct {
        others_correct >= wrong
    } else {
        wrong >= others_correct
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteSimulation {
    pub accuracy: SimulationReport,
    /// Match frequency of one high-accuracy worker.
    pub match_high: Option<SimulationReport>,
    /// Match frequency of one low-accuracy worker; `None` if there is none.
    pub match_low: Option<SimulationReport>,
}

/// Simulates whole voting rounds under profile `kind` in `true_state`.
pub fn simulate_votes(
    kind: SneKind,
    true_state: State,
    pop: &WorkerPopulation,
    trials: u64,
    seed: u64,
) -> Result<VoteSimulation> {
    let n = pop.n_workers;
    let k = pop.k(true_state);
    let roster: Vec<(WorkerStrategy, f64)> = (0..n)
        .map(|i| {
            let t = if i < k {
                WorkerType::High
            } else {
                WorkerType::Low
            };
            (kind.strategy(t), pop.accuracy(t))
        })
        .collect();
    // Worker 0 is high-accuracy; worker k (if any) is low-accuracy.
    let focal_low = (k < n).then_some(k);

    let counts = run_partitioned::<3>(trials, seed, |rng, m, counts| {
        let mut reports = vec![false; n];
        for _ in 0..m {
            let truth: bool = rng.gen();
            for (r, &(s, acc)) in reports.iter_mut().zip(&roster) {
                let correct = report_is_correct(rng, s, acc);
                *r = if correct { truth } else { !truth };
            }
            let agree = reports.iter().filter(|&&r| r == truth).count();
            let majority_right = match (2 * agree).cmp(&n) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => rng.gen_bool(0.5),
            };
            counts[0] += u64::from(majority_right);
            let ones = reports.iter().filter(|&&r| r).count();
            let focal_match = |i: usize| {
                let own = reports[i];
                let others_same = if own { ones - 1 } else { n - ones - 1 };
                others_same >= (n - 1) - others_same
            };
            counts[1] += u64::from(focal_match(0));
            if let Some(i) = focal_low {
                counts[2] += u64::from(focal_match(i));
            }
        }
    })?;

    let analytic_match = |t: WorkerType| -> Result<Option<f64>> {
        match others_mix(kind, t, k, pop) {
            Some(mix) => {
                let q = kind.strategy(t).report_accuracy(pop.accuracy(t));
                Ok(Some(mix.tally()?.match_prob(q)))
            }
            None => Ok(None),
        }
    };
    let accuracy = SimulationReport::proportion(
        counts[0],
        trials,
        voting::aggregated_accuracy(kind, k, pop)?,
        seed,
    );
    let match_high = analytic_match(WorkerType::High)?
        .map(|g| SimulationReport::proportion(counts[1], trials, g, seed));
    let match_low = match focal_low {
        Some(_) => analytic_match(WorkerType::Low)?
            .map(|g| SimulationReport::proportion(counts[2], trials, g, seed)),
        None => None,
    };
    Ok(VoteSimulation {
        accuracy,
        match_high,
        match_low,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSimulation {
    pub q_hh: SimulationReport,
    pub q_hl: SimulationReport,
    pub q_lh: SimulationReport,
    pub q_ll: SimulationReport,
    /// Frequency of the high state among rounds announcing High.
    pub posterior_high_given_high: Option<SimulationReport>,
    /// Frequency of the high state among rounds announcing Low.
    pub posterior_high_given_low: Option<SimulationReport>,
}

impl ChannelSimulation {
    pub fn reports(&self) -> Vec<(&'static str, &SimulationReport)> {
        let mut out = vec![
            ("q_hh", &self.q_hh),
            ("q_hl", &self.q_hl),
            ("q_lh", &self.q_lh),
            ("q_ll", &self.q_ll),
        ];
        if let Some(r) = &self.posterior_high_given_high {
            out.push(("posterior_high_given_high", r));
        }
        if let Some(r) = &self.posterior_high_given_low {
            out.push(("posterior_high_given_low", r));
        }
        out
    }
}

/// Samples (state, announcement) pairs from the prior and the platform's
/// committed strategy.
pub fn simulate_channel(
    prior: &Belief,
    strat: &RevelationStrategy,
    trials: u64,
    seed: u64,
) -> Result<ChannelSimulation> {
    let counts = run_partitioned::<4>(trials, seed, |rng, m, counts| {
        for _ in 0..m {
            let state = if rng.gen_bool(prior.mu_high) {
                State::High
            } else {
                State::Low
            };
            let announce_high = rng.gen_bool(strat.announce_prob(state, Announcement::High));
            let idx = match (state, announce_high) {
                (State::High, true) => 0,
                (State::High, false) => 1,
                (State::Low, true) => 2,
                (State::Low, false) => 3,
            };
            counts[idx] += 1;
        }
    })?;
    let cases = beliefs::case_probabilities(prior, strat);
    let conditional = |high: u64, low: u64, a: Announcement| -> Result<Option<SimulationReport>> {
        let n = high + low;
        if n == 0 {
            return Ok(None);
        }
        let post = beliefs::posterior_strategic(prior, strat, a)?;
        Ok(Some(SimulationReport::proportion(
            high,
            n,
            post.mu_high,
            seed,
        )))
    };
    Ok(ChannelSimulation {
        q_hh: SimulationReport::proportion(counts[0], trials, cases.q_hh, seed),
        q_hl: SimulationReport::proportion(counts[1], trials, cases.q_hl, seed),
        q_lh: SimulationReport::proportion(counts[2], trials, cases.q_lh, seed),
        q_ll: SimulationReport::proportion(counts[3], trials, cases.q_ll, seed),
        posterior_high_given_high: conditional(counts[0], counts[2], Announcement::High)?,
        posterior_high_given_low: conditional(counts[1], counts[3], Announcement::Low)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationEstimate {
    pub worker_type: WorkerType,
    pub strategy: WorkerStrategy,
    pub payoff: SimulationReport,
    /// Mean payoff gain over the profile strategy, paired per trial.
    pub gain: f64,
    pub gain_std_error: f64,
    pub profitable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseCheck {
    pub kind: SneKind,
    pub reward: f64,
    pub rows: Vec<DeviationEstimate>,
}

impl BestResponseCheck {
    pub fn any_profitable(&self) -> bool {
        self.rows.iter().any(|r| r.profitable)
    }
}

/// Estimates every unilateral deviation's payoff. The state is drawn from
/// the posterior (restricted to states where the worker's type exists); all
/// three own strategies share the other workers' votes and the own estimate.
pub fn best_response_check(
    kind: SneKind,
    reward: f64,
    posterior: &Belief,
    pop: &WorkerPopulation,
    trials: u64,
    seed: u64,
) -> Result<BestResponseCheck> {
    let ctx = ProfileContext::new(kind, *posterior, *pop, Announcement::High);
    let mut rows = Vec::new();
    for (ti, t) in WorkerType::ALL.into_iter().enumerate() {
        let states: Vec<(State, f64)> = State::ALL
            .into_iter()
            .filter(|&s| pop.type_count(t, s) > 0)
            .map(|s| (s, posterior.weight(s)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        let mass: f64 = states.iter().map(|(_, w)| w).sum();
        if states.is_empty() {
            continue;
        }
        let acc = pop.accuracy(t);
        let profile = kind.strategy(t);
        let others: Vec<Vec<(WorkerStrategy, f64)>> = states
            .iter()
            .map(|&(s, _)| {
                let mix = others_mix(kind, t, pop.k(s), pop).expect("type present");
                let mut v = Vec::with_capacity(mix.total());
                v.extend(std::iter::repeat_n(
                    (WorkerStrategy::EffortTruthful, pop.p_high),
                    mix.n_effort_high,
                ));
                v.extend(std::iter::repeat_n(
                    (WorkerStrategy::EffortTruthful, pop.p_low),
                    mix.n_effort_low,
                ));
                v.extend(std::iter::repeat_n(
                    (WorkerStrategy::NoEffortRandom, 0.5),
                    mix.n_random,
                ));
                v
            })
            .collect();
        let effort_cost = |s: WorkerStrategy| {
            if s.exerts_effort() {
                pop.effort_cost
            } else {
                0.0
            }
        };

        // counts: matches per own strategy (3), then paired match differences
        // against the profile strategy as (sum of +1, sum of -1) per strategy (6).
        let counts =
            run_partitioned::<9>(trials, seed.wrapping_add(ti as u64), |rng, m, counts| {
                for _ in 0..m {
                    let si = if states.len() == 1 || rng.gen::<f64>() * mass < states[0].1 {
                        0
                    } else {
                        1
                    };
                    let roster = &others[si];
                    let correct = roster
                        .iter()
                        .filter(|&&(s, a)| report_is_correct(rng, s, a))
                        .count();
                    let estimate_right = rng.gen_bool(acc);
                    let coin = rng.gen_bool(0.5);
                    let own = |s: WorkerStrategy| match s {
                        WorkerStrategy::NoEffortRandom => coin,
                        WorkerStrategy::EffortTruthful => estimate_right,
                        WorkerStrategy::EffortUntruthful => !estimate_right,
                    };
                    let base = matches(own(profile), correct, roster.len());
                    for (j, s) in WorkerStrategy::ALL.into_iter().enumerate() {
                        let hit = matches(own(s), correct, roster.len());
                        counts[j] += u64::from(hit);
                        match (hit, base) {
                            (true, false) => counts[3 + 2 * j] += 1,
                            (false, true) => counts[4 + 2 * j] += 1,
                            _ => {}
                        }
                    }
                }
            })?;

        let n = trials as f64;
        for (j, s) in WorkerStrategy::ALL.into_iter().enumerate() {
            let g = equilibrium::expected_match_prob(t, s, &ctx)?;
            let analytic = g * reward - effort_cost(s);
            let freq = counts[j] as f64 / n;
            let se = reward * (freq * (1.0 - freq) / n).sqrt();
            let payoff = SimulationReport::from_estimate(
                trials,
                freq * reward - effort_cost(s),
                se,
                analytic,
                seed,
            );
            // Paired difference d in {-1, 0, 1} per trial, scaled by R.
            let plus = counts[3 + 2 * j] as f64 / n;
            let minus = counts[4 + 2 * j] as f64 / n;
            let mean_d = plus - minus;
            let var_d = (plus + minus - mean_d * mean_d).max(0.0);
            let gain = reward * mean_d - (effort_cost(s) - effort_cost(profile));
            let gain_std_error = reward * (var_d / n).sqrt();
            let tol = 1e-9 * reward.max(pop.effort_cost).max(1.0);
            let profitable = gain > SIGMA_BAND * gain_std_error + tol;
            rows.push(DeviationEstimate {
                worker_type: t,
                strategy: s,
                payoff,
                gain,
                gain_std_error,
                profitable,
            });
        }
    }
    Ok(BestResponseCheck { kind, reward, rows })
}
