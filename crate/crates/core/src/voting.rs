//! Exact majority-voting probabilities.
//!
//! Votes are independent Bernoulli trials ("is this report correct?"), so the
//! number of correct votes follows a Poisson-binomial law. Everything here is
//! derived from that distribution, computed by direct convolution.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SneKind, WorkerPopulation, WorkerType};

/// Composition of a group of voters by report accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoterMix {
    /// Voters correct with probability `p_high`.
    pub n_effort_high: usize,
    /// Voters correct with probability `p_low`.
    pub n_effort_low: usize,
    /// Voters correct with probability 1/2.
    pub n_random: usize,
    pub p_high: f64,
    pub p_low: f64,
}

impl VoterMix {
    pub fn new(
        n_effort_high: usize,
        n_effort_low: usize,
        n_random: usize,
        p_high: f64,
        p_low: f64,
    ) -> Self {
        VoterMix {
            n_effort_high,
            n_effort_low,
            n_random,
            p_high,
            p_low,
        }
    }

    pub fn all_random(n: usize) -> Self {
        VoterMix::new(0, 0, n, 0.5, 0.5)
    }

    pub fn total(&self) -> usize {
        self.n_effort_high + self.n_effort_low + self.n_random
    }

    /// Per-voter probabilities of a correct vote.
    pub fn success_probs(&self) -> Vec<f64> {
        let mut probs = Vec::with_capacity(self.total());
        probs.extend(std::iter::repeat_n(self.p_high, self.n_effort_high));
        probs.extend(std::iter::repeat_n(self.p_low, self.n_effort_low));
        probs.extend(std::iter::repeat_n(0.5, self.n_random));
        probs
    }

    /// Distribution of the correct-vote count relative to half the voters.
    /// Memoized per thread; the grid searches revisit the same mixes many
    /// times.
    pub fn tally(&self) -> Result<Tally> {
        let key = (
            self.n_effort_high,
            self.n_effort_low,
            self.n_random,
            self.p_high.to_bits(),
            self.p_low.to_bits(),
        );
        if let Some(t) = TALLY_CACHE.with(|c| c.borrow().get(&key).copied()) {
            return Ok(t);
        }
        let t = Tally::from_pmf(&poisson_binomial_pmf(&self.success_probs())?)?;
        TALLY_CACHE.with(|c| {
            let mut c = c.borrow_mut();
            if c.len() >= TALLY_CACHE_CAP {
                c.clear();
            }
            c.insert(key, t);
        });
        Ok(t)
    }
}

type MixKey = (usize, usize, usize, u64, u64);
const TALLY_CACHE_CAP: usize = 1 << 16;

thread_local! {
    static TALLY_CACHE: RefCell<HashMap<MixKey, Tally>> = RefCell::new(HashMap::new());
}

/// `pmf[j]` is the probability that exactly `j` of the independent trials
/// succeed.
pub fn poisson_binomial_pmf(success_probs: &[f64]) -> Result<Vec<f64>> {
    if success_probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut pmf = vec![0.0; success_probs.len() + 1];
    pmf[0] = 1.0;
    for (i, &p) in success_probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRangeProbability {
                what: "success probability",
                value: p,
            });
        }
        // In place, high index first so pmf[j - 1] is still the old value.
        for j in (1..=i + 1).rev() {
            pmf[j] = pmf[j] * (1.0 - p) + pmf[j - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    Ok(pmf)
}

/// Where the number of correct votes `C` among `T` voters falls relative to
/// `T / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    /// `Pr(C > T/2)`
    pub above: f64,
    /// `Pr(C = T/2)`, zero when `T` is odd.
    pub tie: f64,
    /// `Pr(C < T/2)`
    pub below: f64,
}

impl Tally {
    pub fn from_pmf(pmf: &[f64]) -> Result<Self> {
        if pmf.len() < 2 {
            return Err(Error::EmptyInput);
        }
        let total = pmf.len() - 1;
        let mut tally = Tally {
            above: 0.0,
            tie: 0.0,
            below: 0.0,
        };
        for (j, &mass) in pmf.iter().enumerate() {
            match (2 * j).cmp(&total) {
                std::cmp::Ordering::Greater => tally.above += mass,
                std::cmp::Ordering::Equal => tally.tie += mass,
                std::cmp::Ordering::Less => tally.below += mass,
            }
        }
        Ok(tally)
    }

    /// Majority correct, ties broken by a fair coin.
    pub fn majority_correct(&self) -> f64 {
        self.above + 0.5 * self.tie
    }

    /// Probability of matching the majority when the own report is correct
    /// with probability `q`; a tie counts as a match either way.
    pub fn match_prob(&self, q: f64) -> f64 {
        q * (self.above + self.tie) + (1.0 - q) * (self.below + self.tie)
    }

    /// Slope of [`Tally::match_prob`] in `q`.
    pub fn margin(&self) -> f64 {
        self.above - self.below
    }
}

pub fn majority_correct_prob(mix: &VoterMix) -> Result<f64> {
    if mix.total() > 0 && mix.n_effort_high + mix.n_effort_low == 0 {
        // Symmetric: exactly one half, without rounding noise.
        return Ok(0.5);
    }
    Ok(mix.tally()?.majority_correct())
}

/// Probability that a worker whose report is correct with probability
/// `own_correct_prob` agrees with the majority of `others`.
pub fn match_prob(own_correct_prob: f64, others: &VoterMix) -> Result<f64> {
    if !(0.0..=1.0).contains(&own_correct_prob) {
        return Err(Error::OutOfRangeProbability {
            what: "own correctness probability",
            value: own_correct_prob,
        });
    }
    Ok(others.tally()?.match_prob(own_correct_prob))
}

/// Composition of all `n_workers` reports under profile `kind` when `k`
/// workers are high-accuracy.
pub fn profile_mix(kind: SneKind, k: usize, pop: &WorkerPopulation) -> VoterMix {
    let n = pop.n_workers;
    let (high, low, random) = match kind {
        SneKind::NoEffort => (0, 0, n),
        SneKind::Full => (k, n - k, 0),
        SneKind::Partial => (k, 0, n - k),
    };
    VoterMix::new(high, low, random, pop.p_high, pop.p_low)
}

/// Composition of the other `n_workers - 1` reports seen by a worker of
/// `focal` type, or `None` when that type has no members at this `k`.
pub fn others_mix(
    kind: SneKind,
    focal: WorkerType,
    k: usize,
    pop: &WorkerPopulation,
) -> Option<VoterMix> {
    let mut mix = profile_mix(kind, k, pop);
    let slot = match (kind.strategy(focal).exerts_effort(), focal) {
        (false, _) => &mut mix.n_random,
        (true, WorkerType::High) => &mut mix.n_effort_high,
        (true, WorkerType::Low) => &mut mix.n_effort_low,
    };
    let members = match focal {
        WorkerType::High => k,
        WorkerType::Low => pop.n_workers - k,
    };
    if members == 0 {
        return None;
    }
    *slot -= 1;
    Some(mix)
}

/// Accuracy of the majority of all reports under profile `kind` with `k`
/// high-accuracy workers.
pub fn aggregated_accuracy(kind: SneKind, k: usize, pop: &WorkerPopulation) -> Result<f64> {
    if k > pop.n_workers {
        return Err(Error::InvalidCounts {
            n_workers: pop.n_workers,
            k_high: k,
            k_low: k,
        });
    }
    majority_correct_prob(&profile_mix(kind, k, pop))
}
