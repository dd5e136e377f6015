//! Stage III: which symmetric equilibria the workers can sustain.
//!
//! A worker's match probability is affine in the accuracy of its own report,
//! `G(q) = (below + tie) + q * margin`, where `margin = Pr(C > T/2) - Pr(C < T/2)`
//! over the other workers' correct votes. Posterior uncertainty only
//! reweights the tallies of the two candidate states, so every quantity here
//! is built from one posterior-weighted [`Tally`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Announcement, Belief, SneKind, State, WorkerPopulation, WorkerStrategy, WorkerType,
};
use crate::oracle;
use crate::voting::{others_mix, Tally};

/// Relative slack for payoff comparisons.
pub const PAYOFF_TOL: f64 = 1e-9;

/// Everything the workers' payoffs depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileContext {
    pub kind: SneKind,
    pub posterior: Belief,
    pub pop: WorkerPopulation,
    pub announcement: Announcement,
}

impl ProfileContext {
    pub fn new(
        kind: SneKind,
        posterior: Belief,
        pop: WorkerPopulation,
        announcement: Announcement,
    ) -> Self {
        ProfileContext {
            kind,
            posterior,
            pop,
            announcement,
        }
    }

    pub fn with_kind(&self, kind: SneKind) -> Self {
        ProfileContext { kind, ..*self }
    }
}

/// Reward thresholds of the f- and p-profiles.
///
/// `r_ph` is infinite when no low-accuracy worker can exist under the
/// posterior, since nobody is then tempted away from the p-profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub r_f: Option<f64>,
    pub r_pl: Option<f64>,
    pub r_ph: Option<f64>,
    pub condition11: bool,
}

impl Thresholds {
    pub fn for_belief(
        posterior: Belief,
        pop: WorkerPopulation,
        announcement: Announcement,
    ) -> Result<Self> {
        let ctx = ProfileContext::new(SneKind::Full, posterior, pop, announcement);
        compute_thresholds(&ctx, &ctx.with_kind(SneKind::Partial))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerPayoffTable {
    pub payoff_high: f64,
    /// `None` when no low-accuracy worker can exist under the belief.
    pub payoff_low: Option<f64>,
}

impl WorkerPayoffTable {
    pub fn get(&self, worker_type: WorkerType) -> Option<f64> {
        match worker_type {
            WorkerType::High => Some(self.payoff_high),
            WorkerType::Low => self.payoff_low,
        }
    }

    /// Componentwise `>=` up to `tol`, over the types present in both.
    fn weakly_above(&self, other: &WorkerPayoffTable, tol: f64) -> bool {
        WorkerType::ALL
            .iter()
            .all(|&t| match (self.get(t), other.get(t)) {
                (Some(a), Some(b)) => a >= b - tol,
                _ => true,
            })
    }
}

/// States the focal type can be in, with weights renormalized over the
/// states where that type has at least one member.
fn focal_weights(
    worker_type: WorkerType,
    posterior: &Belief,
    pop: &WorkerPopulation,
) -> Vec<(State, f64)> {
    let live: Vec<(State, f64)> = State::ALL
        .iter()
        .map(|&s| (s, posterior.weight(s)))
        .filter(|&(s, w)| w > 0.0 && pop.type_count(worker_type, s) > 0)
        .collect();
    let mass: f64 = live.iter().map(|(_, w)| w).sum();
    live.into_iter().map(|(s, w)| (s, w / mass)).collect()
}

/// Posterior-weighted tally of the other workers' votes seen by a worker of
/// `worker_type` under profile `kind`.
pub fn expected_tally(
    worker_type: WorkerType,
    kind: SneKind,
    posterior: &Belief,
    pop: &WorkerPopulation,
) -> Result<Tally> {
    let weights = focal_weights(worker_type, posterior, pop);
    if weights.is_empty() {
        return Err(Error::AbsentWorkerType(worker_type));
    }
    let mut acc = Tally {
        above: 0.0,
        tie: 0.0,
        below: 0.0,
    };
    for (state, w) in weights {
        let mix = others_mix(kind, worker_type, pop.k(state), pop)
            .expect("focal type present in weighted state");
        let t = mix.tally()?;
        acc.above += w * t.above;
        acc.tie += w * t.tie;
        acc.below += w * t.below;
    }
    Ok(acc)
}

/// Probability `G` that a worker of `worker_type` playing `own_strategy`
/// collects the reward, everybody else following `ctx.kind`.
pub fn expected_match_prob(
    worker_type: WorkerType,
    own_strategy: WorkerStrategy,
    ctx: &ProfileContext,
) -> Result<f64> {
    let tally = expected_tally(worker_type, ctx.kind, &ctx.posterior, &ctx.pop)?;
    Ok(tally.match_prob(own_strategy.report_accuracy(ctx.pop.accuracy(worker_type))))
}

/// Gain in match probability from effort plus truthful reporting over a
/// random report, and whether truthful beats untruthful reporting.
struct EffortGain {
    gain: f64,
    truthful_ok: bool,
}

fn effort_gain(
    worker_type: WorkerType,
    kind: SneKind,
    posterior: &Belief,
    pop: &WorkerPopulation,
) -> Result<Option<EffortGain>> {
    let tally = match expected_tally(worker_type, kind, posterior, pop) {
        Ok(t) => t,
        Err(Error::AbsentWorkerType(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let p = pop.accuracy(worker_type);
    Ok(Some(EffortGain {
        gain: tally.match_prob(p) - tally.match_prob(0.5),
        truthful_ok: tally.match_prob(p) >= tally.match_prob(1.0 - p),
    }))
}

/// Whether a p-profile can be sustained at some reward: high-accuracy
/// workers gain at least as much from effort as low-accuracy workers would.
pub fn condition_psne(posterior: &Belief, pop: &WorkerPopulation) -> bool {
    let high = effort_gain(WorkerType::High, SneKind::Partial, posterior, pop);
    let low = effort_gain(WorkerType::Low, SneKind::Partial, posterior, pop);
    match (high, low) {
        (Ok(Some(h)), Ok(Some(l))) => h.truthful_ok && h.gain > 0.0 && h.gain >= l.gain,
        (Ok(Some(h)), Ok(None)) => h.truthful_ok && h.gain > 0.0,
        _ => false,
    }
}

/// The same comparison written with raw majority-correctness probabilities
/// of the other workers in place of the match margins. Weaker than
/// [`condition_psne`]: it holds whenever that one does.
pub fn condition_psne_majority_form(posterior: &Belief, pop: &WorkerPopulation) -> Result<bool> {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for state in State::ALL {
        let w = posterior.weight(state);
        if w <= 0.0 {
            continue;
        }
        let k = pop.k(state);
        let fewer = others_mix(SneKind::Partial, WorkerType::High, k, pop)
            .expect("k >= 1 high-accuracy workers");
        lhs += w * fewer.tally()?.majority_correct();
        // Others of a low-accuracy worker: k informed, the rest random.
        let mut more = fewer;
        more.n_effort_high += 1;
        more.n_random = more.n_random.saturating_sub(1);
        if pop.type_count(WorkerType::Low, state) == 0 {
            more = fewer;
        }
        rhs += w * more.tally()?.majority_correct();
    }
    let ratio = (2.0 * pop.p_high - 1.0) / (2.0 * pop.p_low - 1.0);
    Ok(ratio * lhs >= rhs)
}

pub fn compute_thresholds(ctx_f: &ProfileContext, ctx_p: &ProfileContext) -> Result<Thresholds> {
    if ctx_f.kind != SneKind::Full || ctx_p.kind != SneKind::Partial {
        return Err(Error::ContextMismatch(
            "expected an f-profile and a p-profile context",
        ));
    }
    if ctx_f.posterior != ctx_p.posterior
        || ctx_f.pop != ctx_p.pop
        || ctx_f.announcement != ctx_p.announcement
    {
        return Err(Error::ContextMismatch(
            "posterior, population and announcement must agree",
        ));
    }
    let pop = &ctx_f.pop;
    let posterior = &ctx_f.posterior;
    let cost = pop.effort_cost;

    let mut truthful_ok = true;
    let mut min_gain = f64::INFINITY;
    for t in WorkerType::ALL {
        if let Some(g) = effort_gain(t, SneKind::Full, posterior, pop)? {
            truthful_ok &= g.truthful_ok;
            min_gain = min_gain.min(g.gain);
        }
    }
    let r_f = if !truthful_ok {
        None
    } else if cost == 0.0 {
        Some(0.0)
    } else if min_gain > 0.0 {
        Some(cost / min_gain)
    } else {
        None
    };

    let condition11 = condition_psne(posterior, pop);
    let (r_pl, r_ph) = if !condition11 {
        (None, None)
    } else if cost == 0.0 {
        (Some(0.0), Some(0.0))
    } else {
        let high = effort_gain(WorkerType::High, SneKind::Partial, posterior, pop)?
            .expect("high-accuracy workers always exist");
        let low = effort_gain(WorkerType::Low, SneKind::Partial, posterior, pop)?;
        let r_ph = match low {
            Some(l) if l.gain > 0.0 => cost / l.gain,
            _ => f64::INFINITY,
        };
        (Some(cost / high.gain), Some(r_ph))
    };

    Ok(Thresholds {
        r_f,
        r_pl,
        r_ph,
        condition11,
    })
}

pub fn sne_exists(kind: SneKind, reward: f64, thresholds: &Thresholds) -> bool {
    match kind {
        SneKind::NoEffort => reward >= 0.0,
        SneKind::Full => thresholds.r_f.is_some_and(|r| reward >= r),
        SneKind::Partial => {
            thresholds.condition11
                && matches!((thresholds.r_pl, thresholds.r_ph), (Some(lo), Some(hi)) if lo <= reward && reward <= hi)
        }
    }
}

/// Kinds that exist at `reward`, in the order f, p, n.
pub fn existing_equilibria(reward: f64, thresholds: &Thresholds) -> Vec<SneKind> {
    [SneKind::Full, SneKind::Partial, SneKind::NoEffort]
        .into_iter()
        .filter(|&k| sne_exists(k, reward, thresholds))
        .collect()
}

/// Expected payoff of each worker type under `ctx.kind` at `reward`, as the
/// workers themselves evaluate it.
pub fn worker_payoffs(reward: f64, ctx: &ProfileContext) -> Result<WorkerPayoffTable> {
    let payoff = |t: WorkerType| -> Result<Option<f64>> {
        let strategy = ctx.kind.strategy(t);
        match expected_match_prob(t, strategy, ctx) {
            Ok(g) => {
                let effort = if strategy.exerts_effort() {
                    ctx.pop.effort_cost
                } else {
                    0.0
                };
                Ok(Some(g * reward - effort))
            }
            Err(Error::AbsentWorkerType(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(WorkerPayoffTable {
        payoff_high: payoff(WorkerType::High)?.ok_or(Error::AbsentWorkerType(WorkerType::High))?,
        payoff_low: payoff(WorkerType::Low)?,
    })
}

/// Selects the candidate whose payoff table is weakly above every other's.
/// Exact ties resolve in the order f, p, n.
pub fn pareto_dominant(
    candidates: &[SneKind],
    reward: f64,
    posterior: &Belief,
    pop: &WorkerPopulation,
    announcement: Announcement,
) -> Result<SneKind> {
    if candidates.is_empty() {
        return Err(Error::NoDominant(Vec::new()));
    }
    let tol = PAYOFF_TOL * reward.abs().max(pop.effort_cost).max(1.0);
    let mut tables = Vec::with_capacity(candidates.len());
    for &kind in candidates {
        let ctx = ProfileContext::new(kind, *posterior, *pop, announcement);
        tables.push((kind, worker_payoffs(reward, &ctx)?));
    }
    let preference = |k: SneKind| match k {
        SneKind::Full => 0,
        SneKind::Partial => 1,
        SneKind::NoEffort => 2,
    };
    tables.sort_by_key(|(k, _)| preference(*k));
    tables
        .iter()
        .find(|(_, table)| {
            tables
                .iter()
                .all(|(_, other)| table.weakly_above(other, tol))
        })
        .map(|(k, _)| *k)
        .ok_or_else(|| Error::NoDominant(candidates.to_vec()))
}

/// The equilibrium the workers coordinate on at `reward`.
pub fn select_equilibrium(
    reward: f64,
    thresholds: &Thresholds,
    posterior: &Belief,
    pop: &WorkerPopulation,
    announcement: Announcement,
) -> Result<SneKind> {
    let candidates = existing_equilibria(reward, thresholds);
    pareto_dominant(&candidates, reward, posterior, pop, announcement)
}

/// Checks every unilateral deviation by exhaustive enumeration of the vote
/// outcomes. Only for populations of at most
/// [`oracle::MAX_ENUM_WORKERS`] workers.
pub fn verify_sne_bruteforce(kind: SneKind, reward: f64, ctx: &ProfileContext) -> Result<bool> {
    let pop = &ctx.pop;
    if pop.n_workers > oracle::MAX_ENUM_WORKERS {
        return Err(Error::TooLarge {
            n: pop.n_workers,
            max: oracle::MAX_ENUM_WORKERS,
        });
    }
    let tol = PAYOFF_TOL * reward.abs().max(pop.effort_cost).max(1.0);
    for t in WorkerType::ALL {
        let mut payoffs = Vec::with_capacity(3);
        for s in WorkerStrategy::ALL {
            let Some(g) = oracle::expected_match_prob(t, s, kind, &ctx.posterior, pop)? else {
                break;
            };
            let effort = if s.exerts_effort() {
                pop.effort_cost
            } else {
                0.0
            };
            payoffs.push((s, g * reward - effort));
        }
        if payoffs.is_empty() {
            continue;
        }
        let played = kind.strategy(t);
        let base = payoffs.iter().find(|(s, _)| *s == played).unwrap().1;
        if payoffs.iter().any(|&(_, u)| u > base + tol) {
            return Ok(false);
        }
    }
    Ok(true)
}
