//! Stages I and II: the platform's reward design and revelation strategy.
//!
//! In stage II the platform knows the realized state and the workers'
//! posterior, and pays the smallest reward that sustains the equilibrium it
//! wants (or nothing). In stage I it commits to a revelation strategy before
//! the state is drawn, so it maximizes the payoff averaged over the four
//! (state, announcement) cases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beliefs::{self, CaseProbabilities};
use crate::equilibrium::{self, ProfileContext, Thresholds, WorkerPayoffTable};
use crate::error::{Error, Result};
use crate::model::{
    Announcement, Belief, RevelationStrategy, SneKind, State, WorkerMode, WorkerPopulation,
    WorkerType,
};
use crate::voting::{self, others_mix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardDesign {
    pub r_star: f64,
    pub elicited: SneKind,
    pub bang_f: Option<f64>,
    pub bang_p: Option<f64>,
    pub beta_tilde: Option<f64>,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPayoff {
    pub state: State,
    pub announcement: Announcement,
    pub posterior: Belief,
    /// Equilibrium the workers actually play at `design.r_star`.
    pub equilibrium: SneKind,
    pub platform_payoff: f64,
    pub accuracy: f64,
    pub expected_total_reward: f64,
    /// Payoffs as the workers evaluate them under their posterior.
    pub worker_payoffs: WorkerPayoffTable,
    /// Payoffs under the realized state.
    pub realized_worker_payoffs: WorkerPayoffTable,
    pub total_effort_cost: f64,
    pub design: RewardDesign,
}

/// Per-case results of one stage-I evaluation. Cases that cannot occur are
/// `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CasePayoffs {
    pub hh: Option<ScenarioPayoff>,
    pub hl: Option<ScenarioPayoff>,
    pub lh: Option<ScenarioPayoff>,
    pub ll: Option<ScenarioPayoff>,
}

impl CasePayoffs {
    pub fn get(&self, state: State, announcement: Announcement) -> Option<&ScenarioPayoff> {
        match (state, announcement) {
            (State::High, Announcement::High) => self.hh.as_ref(),
            (State::High, Announcement::Low) => self.hl.as_ref(),
            (State::Low, Announcement::High) => self.lh.as_ref(),
            (State::Low, Announcement::Low) => self.ll.as_ref(),
        }
    }

    fn slot(&mut self, state: State, announcement: Announcement) -> &mut Option<ScenarioPayoff> {
        match (state, announcement) {
            (State::High, Announcement::High) => &mut self.hh,
            (State::High, Announcement::Low) => &mut self.hl,
            (State::Low, Announcement::High) => &mut self.lh,
            (State::Low, Announcement::Low) => &mut self.ll,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (State, Announcement, Option<&ScenarioPayoff>)> {
        CASES.into_iter().map(|(s, a)| (s, a, self.get(s, a)))
    }
}

pub const CASES: [(State, Announcement); 4] = [
    (State::High, Announcement::High),
    (State::High, Announcement::Low),
    (State::Low, Announcement::High),
    (State::Low, Announcement::Low),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageOneEval {
    pub strategy: RevelationStrategy,
    pub expected_payoff: f64,
    pub case_probs: CaseProbabilities,
    pub case_payoffs: CasePayoffs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageOneOutcome {
    pub eps_star: RevelationStrategy,
    pub expected_payoff: f64,
    pub case_probs: CaseProbabilities,
    pub case_payoffs: CasePayoffs,
    pub grid_step: f64,
}

impl StageOneOutcome {
    pub fn eval(&self) -> StageOneEval {
        StageOneEval {
            strategy: self.eps_star,
            expected_payoff: self.expected_payoff,
            case_probs: self.case_probs,
            case_payoffs: self.case_payoffs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Welfare {
    /// Sum of the workers' own (posterior) payoff evaluations.
    pub aggregate_worker_payoff: f64,
    /// `aggregate_worker_payoff` plus the expected platform payoff.
    pub social_welfare: f64,
    /// Sum of the workers' payoffs under the realized state.
    pub realized_worker_payoff: f64,
    /// `realized_worker_payoff` plus the expected platform payoff; rewards
    /// cancel, leaving accuracy value minus effort cost.
    pub realized_social_welfare: f64,
}

/// Sum over all workers of their probability of matching the majority, with
/// everybody following `kind` in `state`.
fn match_mass(kind: SneKind, state: State, pop: &WorkerPopulation) -> Result<f64> {
    let k = pop.k(state);
    let mut total = 0.0;
    for t in WorkerType::ALL {
        let count = pop.type_count(t, state);
        if let Some(mix) = others_mix(kind, t, k, pop) {
            let q = kind.strategy(t).report_accuracy(pop.accuracy(t));
            total += count as f64 * mix.tally()?.match_prob(q);
        }
    }
    Ok(total)
}

/// Total reward the platform expects to pay when the realized state is
/// `true_state` and everybody follows `kind`.
pub fn expected_total_reward(
    kind: SneKind,
    reward: f64,
    true_state: State,
    pop: &WorkerPopulation,
) -> Result<f64> {
    if reward == 0.0 {
        return Ok(0.0);
    }
    Ok(reward * match_mass(kind, true_state, pop)?)
}

/// Accuracy gained over the no-effort profile per unit of expected reward,
/// evaluated at the sustaining reward `threshold`.
pub fn bang_per_buck(
    kind: SneKind,
    threshold: f64,
    true_state: State,
    pop: &WorkerPopulation,
) -> Result<Option<f64>> {
    if kind == SneKind::NoEffort || !threshold.is_finite() {
        return Ok(None);
    }
    let k = pop.k(true_state);
    let cost = expected_total_reward(kind, threshold, true_state, pop)?;
    if cost <= 0.0 {
        return Ok(None);
    }
    let gain = voting::aggregated_accuracy(kind, k, pop)?
        - voting::aggregated_accuracy(SneKind::NoEffort, k, pop)?;
    Ok(Some(gain / cost))
}

pub fn optimal_reward(
    true_state: State,
    announcement: Announcement,
    posterior: &Belief,
    pop: &WorkerPopulation,
    beta: f64,
) -> Result<RewardDesign> {
    let thresholds = Thresholds::for_belief(*posterior, *pop, announcement)?;
    let k = pop.k(true_state);

    let bang_f = match thresholds.r_f {
        Some(r) => bang_per_buck(SneKind::Full, r, true_state, pop)?,
        None => None,
    };
    let bang_p = match (thresholds.condition11, thresholds.r_pl) {
        (true, Some(r)) => bang_per_buck(SneKind::Partial, r, true_state, pop)?,
        _ => None,
    };
    let acc_f = voting::aggregated_accuracy(SneKind::Full, k, pop)?;
    let acc_p = voting::aggregated_accuracy(SneKind::Partial, k, pop)?;
    let beta_tilde = match (thresholds.r_f, thresholds.r_pl) {
        (Some(r_f), Some(r_pl)) if thresholds.condition11 => {
            if acc_f > acc_p {
                let cost_f = expected_total_reward(SneKind::Full, r_f, true_state, pop)?;
                let cost_p = expected_total_reward(SneKind::Partial, r_pl, true_state, pop)?;
                Some((cost_f - cost_p) / (acc_f - acc_p))
            } else {
                None
            }
        }
        _ => None,
    };

    let nothing = (0.0, SneKind::NoEffort);
    let (mut r_star, mut elicited) = match bang_p {
        Some(bp) if thresholds.condition11 && bang_f.is_none_or(|bf| bp >= bf) => {
            if beta < 1.0 / bp {
                nothing
            } else if beta_tilde.is_none_or(|bt| beta < bt) {
                (thresholds.r_pl.unwrap(), SneKind::Partial)
            } else {
                (thresholds.r_f.unwrap(), SneKind::Full)
            }
        }
        _ => match bang_f {
            Some(bf) if beta >= 1.0 / bf => (thresholds.r_f.unwrap(), SneKind::Full),
            _ => nothing,
        },
    };
    // With no low-accuracy worker in the realized state the two effort
    // profiles coincide; report the full-effort one.
    if let (SneKind::Partial, Some(r_f)) = (elicited, thresholds.r_f) {
        if r_f <= r_star && acc_f >= acc_p {
            (r_star, elicited) = (r_f, SneKind::Full);
        }
    }

    Ok(RewardDesign {
        r_star,
        elicited,
        bang_f,
        bang_p,
        beta_tilde,
        thresholds,
    })
}

/// Expected payoff of each worker type in the realized state.
fn realized_payoffs(
    kind: SneKind,
    reward: f64,
    state: State,
    pop: &WorkerPopulation,
) -> Result<WorkerPayoffTable> {
    let mut out = [None, None];
    for (slot, t) in out.iter_mut().zip(WorkerType::ALL) {
        if let Some(mix) = others_mix(kind, t, pop.k(state), pop) {
            let strategy = kind.strategy(t);
            let g = mix
                .tally()?
                .match_prob(strategy.report_accuracy(pop.accuracy(t)));
            let effort = if strategy.exerts_effort() {
                pop.effort_cost
            } else {
                0.0
            };
            *slot = Some(g * reward - effort);
        }
    }
    Ok(WorkerPayoffTable {
        payoff_high: out[0].expect("high-accuracy workers always exist"),
        payoff_low: out[1],
    })
}

/// Platform payoff of one realized case after the optimal reward design and
/// the workers' equilibrium selection.
pub fn scenario_payoff(
    true_state: State,
    announcement: Announcement,
    posterior: &Belief,
    pop: &WorkerPopulation,
    beta: f64,
) -> Result<ScenarioPayoff> {
    let design = optimal_reward(true_state, announcement, posterior, pop, beta)?;
    let reward = design.r_star;
    // Without a Pareto-dominant equilibrium the platform's recommended
    // profile serves as the focal point.
    let kind = match equilibrium::select_equilibrium(
        reward,
        &design.thresholds,
        posterior,
        pop,
        announcement,
    ) {
        Err(Error::NoDominant(_)) => design.elicited,
        other => other?,
    };
    let k = pop.k(true_state);
    let accuracy = voting::aggregated_accuracy(kind, k, pop)?;
    let expected_total_reward = expected_total_reward(kind, reward, true_state, pop)?;
    let ctx = ProfileContext::new(kind, *posterior, *pop, announcement);
    let effort_workers = WorkerType::ALL
        .iter()
        .filter(|&&t| kind.strategy(t).exerts_effort())
        .map(|&t| pop.type_count(t, true_state))
        .sum::<usize>();
    Ok(ScenarioPayoff {
        state: true_state,
        announcement,
        posterior: *posterior,
        equilibrium: kind,
        platform_payoff: beta * accuracy - expected_total_reward,
        accuracy,
        expected_total_reward,
        worker_payoffs: equilibrium::worker_payoffs(reward, &ctx)?,
        realized_worker_payoffs: realized_payoffs(kind, reward, true_state, pop)?,
        total_effort_cost: effort_workers as f64 * pop.effort_cost,
        design,
    })
}

/// Expected platform payoff of committing to `strat`. Cases with zero
/// probability contribute nothing and are not evaluated.
pub fn expected_platform_payoff(
    strat: &RevelationStrategy,
    prior: &Belief,
    pop: &WorkerPopulation,
    beta: f64,
    mode: WorkerMode,
) -> Result<StageOneEval> {
    let case_probs = beliefs::case_probabilities(prior, strat);
    let mut case_payoffs = CasePayoffs {
        hh: None,
        hl: None,
        lh: None,
        ll: None,
    };
    let mut expected_payoff = 0.0;
    for (state, announcement) in CASES {
        let q = case_probs.get(state, announcement);
        if q <= 0.0 {
            continue;
        }
        let posterior = beliefs::posterior(mode, prior, strat, announcement)?;
        let scenario = scenario_payoff(state, announcement, &posterior, pop, beta)?;
        expected_payoff += q * scenario.platform_payoff;
        *case_payoffs.slot(state, announcement) = Some(scenario);
    }
    Ok(StageOneEval {
        strategy: *strat,
        expected_payoff,
        case_probs,
        case_payoffs,
    })
}

/// Number of grid intervals on `[0, 1]` for `grid_step`.
pub fn grid_intervals(grid_step: f64) -> Result<usize> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidGridStep(grid_step));
    }
    let n = (1.0 / grid_step).round();
    if (n * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidGridStep(grid_step));
    }
    Ok(n as usize)
}

/// Relative gap below which two grid payoffs are treated as equal.
pub const ARGMAX_TOL: f64 = 1e-9;

/// Exhaustive search over the `(eps_h, eps_l)` grid. Ties go to the smaller
/// `eps_h`, then the smaller `eps_l`.
pub fn optimize_revelation(
    prior: &Belief,
    pop: &WorkerPopulation,
    beta: f64,
    mode: WorkerMode,
    grid_step: f64,
) -> Result<StageOneOutcome> {
    let n = grid_intervals(grid_step)?;
    let points: Vec<(usize, usize)> = (0..=n).flat_map(|i| (0..=n).map(move |j| (i, j))).collect();
    let evals: Vec<StageOneEval> = points
        .par_iter()
        .map(|&(i, j)| {
            let strat = RevelationStrategy {
                eps_h: i as f64 / n as f64,
                eps_l: j as f64 / n as f64,
            };
            expected_platform_payoff(&strat, prior, pop, beta, mode)
        })
        .collect::<Result<_>>()?;
    // Payoffs that differ only by rounding count as ties.
    let mut best = &evals[0];
    for eval in &evals[1..] {
        let tol = ARGMAX_TOL * best.expected_payoff.abs().max(1.0);
        if eval.expected_payoff > best.expected_payoff + tol {
            best = eval;
        }
    }
    Ok(StageOneOutcome {
        eps_star: best.strategy,
        expected_payoff: best.expected_payoff,
        case_probs: best.case_probs,
        case_payoffs: best.case_payoffs,
        grid_step,
    })
}

pub fn welfare(eval: &StageOneEval, pop: &WorkerPopulation) -> Welfare {
    let mut believed = 0.0;
    let mut realized = 0.0;
    for (state, announcement, scenario) in eval.case_payoffs.iter() {
        let Some(s) = scenario else { continue };
        let q = eval.case_probs.get(state, announcement);
        let n_high = pop.type_count(WorkerType::High, state) as f64;
        let n_low = pop.type_count(WorkerType::Low, state) as f64;
        let real = &s.realized_worker_payoffs;
        let real_low = real.payoff_low.unwrap_or(0.0);
        // A type absent under the belief but present in reality values its
        // payoff at the realized state.
        let believed_low = s.worker_payoffs.payoff_low.unwrap_or(real_low);
        believed += q * (n_high * s.worker_payoffs.payoff_high + n_low * believed_low);
        realized += q * (n_high * real.payoff_high + n_low * real_low);
    }
    Welfare {
        aggregate_worker_payoff: believed,
        social_welfare: believed + eval.expected_payoff,
        realized_worker_payoff: realized,
        realized_social_welfare: realized + eval.expected_payoff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homogeneous() -> WorkerPopulation {
        WorkerPopulation::new(3, 3, 1, 0.6, 0.55, 1.0).unwrap()
    }

    #[test]
    fn total_reward_examples() {
        let pop = homogeneous();
        for s in State::ALL {
            let n = expected_total_reward(SneKind::NoEffort, 1.0, s, &pop).unwrap();
            assert!((n - 2.25).abs() < 1e-12);
            for kind in SneKind::ALL {
                assert_eq!(expected_total_reward(kind, 0.0, s, &pop).unwrap(), 0.0);
            }
        }
        let f = expected_total_reward(SneKind::Full, 1.0, State::High, &pop).unwrap();
        assert!((f - 2.28).abs() < 1e-12);
    }

    #[test]
    fn bang_per_buck_homogeneous() {
        let pop = homogeneous();
        let b = bang_per_buck(SneKind::Full, 50.0, State::High, &pop)
            .unwrap()
            .unwrap();
        assert!((b - 0.148 / 114.0).abs() < 1e-12);
        assert_eq!(
            bang_per_buck(SneKind::NoEffort, 1.0, State::High, &pop).unwrap(),
            None
        );
    }

    #[test]
    fn reward_design_homogeneous() {
        let pop = homogeneous();
        let sure = Belief::certain(State::High);
        let d = optimal_reward(State::High, Announcement::High, &sure, &pop, 0.0).unwrap();
        assert_eq!((d.r_star, d.elicited), (0.0, SneKind::NoEffort));
        // 1 / B_f = 114 / 0.148 ~ 770.3
        let d = optimal_reward(State::High, Announcement::High, &sure, &pop, 1000.0).unwrap();
        assert_eq!(d.elicited, SneKind::Full);
        assert!((d.r_star - 50.0).abs() < 1e-9);
        let d = optimal_reward(State::High, Announcement::High, &sure, &pop, 700.0).unwrap();
        assert_eq!(d.elicited, SneKind::NoEffort);
    }

    #[test]
    fn scenario_identities() {
        let pop = WorkerPopulation::new(100, 70, 20, 0.75, 0.6, 1.0).unwrap();
        let sure = Belief::certain(State::High);
        let s = scenario_payoff(State::High, Announcement::High, &sure, &pop, 1000.0).unwrap();
        assert!(s.platform_payoff > 500.0, "{s:?}");
        assert!((s.platform_payoff - (1000.0 * s.accuracy - s.expected_total_reward)).abs() < 1e-9);

        let zero = scenario_payoff(State::High, Announcement::High, &sure, &pop, 0.0).unwrap();
        assert_eq!(zero.platform_payoff, 0.0);
        assert_eq!(zero.design.r_star, 0.0);

        let cheap = scenario_payoff(
            State::Low,
            Announcement::Low,
            &Belief::certain(State::Low),
            &pop,
            1.0,
        )
        .unwrap();
        assert_eq!(cheap.design.r_star, 0.0);
        assert_eq!(cheap.platform_payoff, 0.5);
    }

    #[test]
    fn grid_step_validation() {
        assert_eq!(grid_intervals(0.05).unwrap(), 20);
        assert_eq!(grid_intervals(0.01).unwrap(), 100);
        assert_eq!(grid_intervals(1.0).unwrap(), 1);
        assert!(grid_intervals(0.03).is_err());
        assert!(grid_intervals(0.0).is_err());
        assert!(grid_intervals(-0.1).is_err());
    }

    #[test]
    fn honest_strategy_decomposes() {
        let pop = WorkerPopulation::new(9, 6, 2, 0.8, 0.6, 1.0).unwrap();
        let prior = Belief::new(0.7).unwrap();
        let beta = 200.0;
        let eval = expected_platform_payoff(
            &RevelationStrategy::HONEST,
            &prior,
            &pop,
            beta,
            WorkerMode::Strategic,
        )
        .unwrap();
        let hh = scenario_payoff(
            State::High,
            Announcement::High,
            &Belief::certain(State::High),
            &pop,
            beta,
        )
        .unwrap();
        let ll = scenario_payoff(
            State::Low,
            Announcement::Low,
            &Belief::certain(State::Low),
            &pop,
            beta,
        )
        .unwrap();
        let expected = 0.7 * hh.platform_payoff + 0.3 * ll.platform_payoff;
        assert!((eval.expected_payoff - expected).abs() < 1e-9);
        assert!(eval.case_payoffs.hl.is_none() && eval.case_payoffs.lh.is_none());

        let zero = expected_platform_payoff(
            &RevelationStrategy::new(0.4, 0.3).unwrap(),
            &prior,
            &pop,
            0.0,
            WorkerMode::Strategic,
        )
        .unwrap();
        assert_eq!(zero.expected_payoff, 0.0);
        let w = welfare(&zero, &pop);
        assert_eq!((w.aggregate_worker_payoff, w.social_welfare), (0.0, 0.0));
    }
}
