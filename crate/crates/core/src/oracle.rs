//! Exhaustive-enumeration oracles for small populations.
//!
//! Nothing here goes through the Poisson-binomial convolution in
//! [`crate::voting`]: every vote outcome is listed explicitly and weighted by
//! its probability. These functions exist to check the analytic path.

use crate::error::{Error, Result};
use crate::model::{Belief, SneKind, State, WorkerPopulation, WorkerStrategy, WorkerType};

/// Largest population the oracles will enumerate.
pub const MAX_ENUM_WORKERS: usize = 9;

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ENUM_WORKERS {
        return Err(Error::TooLarge {
            n,
            max: MAX_ENUM_WORKERS,
        });
    }
    Ok(())
}

/// Probability of each correct/incorrect pattern, visited in mask order.
fn for_each_outcome(probs: &[f64], mut visit: impl FnMut(usize, f64)) {
    for mask in 0u32..(1u32 << probs.len()) {
        let mut weight = 1.0;
        for (i, &p) in probs.iter().enumerate() {
            weight *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
        }
        visit(mask.count_ones() as usize, weight);
    }
}

/// Majority of `probs` voters correct, fair-coin tie-break.
pub fn majority_correct(probs: &[f64]) -> Result<f64> {
    check_size(probs.len())?;
    if probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = probs.len();
    let mut total = 0.0;
    for_each_outcome(probs, |correct, weight| {
        if 2 * correct > n {
            total += weight;
        } else if 2 * correct == n {
            total += 0.5 * weight;
        }
    });
    Ok(total)
}

/// A focal voter correct with probability `own` matches the majority of
/// `others` (ties match). Enumerates the focal vote together with the rest.
pub fn match_prob(own: f64, others: &[f64]) -> Result<f64> {
    check_size(others.len() + 1)?;
    if others.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut all = Vec::with_capacity(others.len() + 1);
    all.extend_from_slice(others);
    all.push(own);
    let t = others.len();
    let own_bit = 1u32 << t;
    let mut total = 0.0;
    for mask in 0u32..(1u32 << all.len()) {
        let mut weight = 1.0;
        for (i, &p) in all.iter().enumerate() {
            weight *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
        }
        let others_correct = (mask & !own_bit).count_ones() as usize;
        let others_wrong = t - others_correct;
        let matched = if mask & own_bit != 0 {
            others_correct >= others_wrong
        } else {
            others_wrong >= others_correct
        };
        if matched {
            total += weight;
        }
    }
    Ok(total)
}

/// Worker roster for a realized `k`: the first `k` workers are
/// high-accuracy, each playing its profile strategy.
pub fn roster(kind: SneKind, k: usize, pop: &WorkerPopulation) -> Vec<(WorkerType, f64)> {
    (0..pop.n_workers)
        .map(|i| {
            let t = if i < k {
                WorkerType::High
            } else {
                WorkerType::Low
            };
            (t, kind.strategy(t).report_accuracy(pop.accuracy(t)))
        })
        .collect()
}

pub fn aggregated_accuracy(kind: SneKind, k: usize, pop: &WorkerPopulation) -> Result<f64> {
    let probs: Vec<f64> = roster(kind, k, pop).into_iter().map(|(_, p)| p).collect();
    majority_correct(&probs)
}

/// Match probability of one worker of `focal` type deviating to `own` while
/// everybody else follows `kind`, with `k` high-accuracy workers.
/// `None` if no worker of that type exists.
pub fn profile_match_prob(
    focal: WorkerType,
    own: WorkerStrategy,
    kind: SneKind,
    k: usize,
    pop: &WorkerPopulation,
) -> Result<Option<f64>> {
    let roster = roster(kind, k, pop);
    let Some(idx) = roster.iter().position(|(t, _)| *t == focal) else {
        return Ok(None);
    };
    let others: Vec<f64> = roster
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != idx)
        .map(|(_, (_, p))| *p)
        .collect();
    let q = own.report_accuracy(pop.accuracy(focal));
    match_prob(q, &others).map(Some)
}

/// Posterior-weighted match probability, dropping states in which the focal
/// type has no members.
pub fn expected_match_prob(
    focal: WorkerType,
    own: WorkerStrategy,
    kind: SneKind,
    posterior: &Belief,
    pop: &WorkerPopulation,
) -> Result<Option<f64>> {
    let mut mass = 0.0;
    let mut total = 0.0;
    for state in State::ALL {
        let w = posterior.weight(state);
        if w <= 0.0 {
            continue;
        }
        if let Some(g) = profile_match_prob(focal, own, kind, pop.k(state), pop)? {
            mass += w;
            total += w * g;
        }
    }
    Ok((mass > 0.0).then(|| total / mass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases_by_hand() {
        assert!((majority_correct(&[0.6, 0.6, 0.6]).unwrap() - 0.648).abs() < 1e-12);
        assert!((match_prob(0.6, &[0.6, 0.6]).unwrap() - 0.76).abs() < 1e-12);
        assert!((match_prob(0.5, &[0.6, 0.6]).unwrap() - 0.74).abs() < 1e-12);
        assert!((match_prob(0.5, &[0.5, 0.5]).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_inputs() {
        assert!(matches!(
            majority_correct(&[0.5; 10]),
            Err(Error::TooLarge { n: 10, .. })
        ));
        assert!(match_prob(0.5, &[0.5; 9]).is_err());
    }
}
