//! Worker beliefs about the realized state after the platform's announcement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Announcement, Belief, RevelationStrategy, State, WorkerMode, PROB_TOL};

/// Joint probabilities of (true state, announcement).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseProbabilities {
    pub q_hh: f64,
    pub q_hl: f64,
    pub q_lh: f64,
    pub q_ll: f64,
}

impl CaseProbabilities {
    pub fn get(&self, state: State, announcement: Announcement) -> f64 {
        match (state, announcement) {
            (State::High, Announcement::High) => self.q_hh,
            (State::High, Announcement::Low) => self.q_hl,
            (State::Low, Announcement::High) => self.q_lh,
            (State::Low, Announcement::Low) => self.q_ll,
        }
    }

    /// Marginal probability of an announcement.
    pub fn announcement_prob(&self, announcement: Announcement) -> f64 {
        self.get(State::High, announcement) + self.get(State::Low, announcement)
    }

    pub fn total(&self) -> f64 {
        self.q_hh + self.q_hl + self.q_lh + self.q_ll
    }
}

pub fn case_probabilities(prior: &Belief, strat: &RevelationStrategy) -> CaseProbabilities {
    CaseProbabilities {
        q_hh: prior.mu_high * (1.0 - strat.eps_l),
        q_hl: prior.mu_high * strat.eps_l,
        q_lh: prior.mu_low * strat.eps_h,
        q_ll: prior.mu_low * (1.0 - strat.eps_h),
    }
}

/// Bayes update of `prior` on hearing `announcement` from a platform
/// committed to `strat`.
pub fn posterior_strategic(
    prior: &Belief,
    strat: &RevelationStrategy,
    announcement: Announcement,
) -> Result<Belief> {
    let joint_high = prior.mu_high * strat.announce_prob(State::High, announcement);
    let joint_low = prior.mu_low * strat.announce_prob(State::Low, announcement);
    let evidence = joint_high + joint_low;
    if evidence <= 0.0 {
        return Err(Error::UnreachableAnnouncement(announcement));
    }
    let mu_high = joint_high / evidence;
    Ok(Belief {
        mu_high,
        mu_low: 1.0 - mu_high,
    })
}

/// Naive workers believe whatever is announced.
pub fn posterior_naive(announcement: Announcement) -> Belief {
    Belief::certain(announcement.claimed())
}

pub fn posterior(
    mode: WorkerMode,
    prior: &Belief,
    strat: &RevelationStrategy,
    announcement: Announcement,
) -> Result<Belief> {
    match mode {
        WorkerMode::Strategic => posterior_strategic(prior, strat, announcement),
        WorkerMode::Naive => Ok(posterior_naive(announcement)),
    }
}

/// Recombines posteriors with announcement probabilities; equals the prior
/// whenever the posteriors are Bayes-consistent.
pub fn recombine(prior: &Belief, strat: &RevelationStrategy) -> Result<f64> {
    let cases = case_probabilities(prior, strat);
    let mut mu_high = 0.0;
    for announcement in Announcement::ALL {
        let weight = cases.announcement_prob(announcement);
        if weight > PROB_TOL {
            mu_high += weight * posterior_strategic(prior, strat, announcement)?.mu_high;
        }
    }
    Ok(mu_high)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(h: f64, l: f64) -> RevelationStrategy {
        RevelationStrategy::new(h, l).unwrap()
    }

    #[test]
    fn strategic_examples() {
        let prior = Belief::new(0.7).unwrap();
        let post = posterior_strategic(&prior, &eps(0.0, 0.0), Announcement::High).unwrap();
        assert_eq!(post, Belief::certain(State::High));

        // 0.7 / (0.7 + 0.3 * 0.3)
        let post = posterior_strategic(&prior, &eps(0.3, 0.0), Announcement::High).unwrap();
        assert!((post.mu_high - 0.7 / 0.79).abs() < 1e-15);
        assert!((post.mu_low - 0.09 / 0.79).abs() < 1e-15);
        assert!((post.mu_high - 0.88608).abs() < 1e-5);

        let even = Belief::new(0.5).unwrap();
        let post = posterior_strategic(&even, &eps(1.0, 1.0), Announcement::High).unwrap();
        assert_eq!(post, Belief::certain(State::Low));
    }

    #[test]
    fn unreachable_announcement_errors() {
        let prior = Belief::new(0.7).unwrap();
        assert_eq!(
            posterior_strategic(&prior, &eps(0.0, 1.0), Announcement::High),
            Err(Error::UnreachableAnnouncement(Announcement::High))
        );
        assert_eq!(
            posterior_strategic(&prior, &eps(1.0, 0.0), Announcement::Low),
            Err(Error::UnreachableAnnouncement(Announcement::Low))
        );
    }

    #[test]
    fn naive_ignores_context() {
        assert_eq!(
            posterior_naive(Announcement::High),
            Belief::certain(State::High)
        );
        assert_eq!(
            posterior_naive(Announcement::Low),
            Belief::certain(State::Low)
        );
        let prior = Belief::new(0.2).unwrap();
        let post = posterior(
            WorkerMode::Naive,
            &prior,
            &eps(0.9, 0.4),
            Announcement::High,
        )
        .unwrap();
        assert_eq!(post, Belief::certain(State::High));
    }

    #[test]
    fn case_probability_examples() {
        let prior = Belief::new(0.7).unwrap();
        let q = case_probabilities(&prior, &eps(0.3, 0.1));
        for (got, want) in [
            (q.q_hh, 0.63),
            (q.q_hl, 0.07),
            (q.q_lh, 0.09),
            (q.q_ll, 0.21),
        ] {
            assert!((got - want).abs() < 1e-12);
        }
        let q = case_probabilities(&prior, &RevelationStrategy::HONEST);
        assert_eq!((q.q_hl, q.q_lh), (0.0, 0.0));
        assert!((q.q_hh - 0.7).abs() < 1e-15 && (q.q_ll - 0.3).abs() < 1e-15);
        let q = case_probabilities(&Belief::new(0.5).unwrap(), &eps(1.0, 1.0));
        assert_eq!((q.q_hh, q.q_hl, q.q_lh, q.q_ll), (0.0, 0.5, 0.5, 0.0));
    }

    #[test]
    fn honest_strategy_matches_naive_posterior() {
        for mu in [0.01, 0.3, 0.7, 0.99] {
            let prior = Belief::new(mu).unwrap();
            for a in Announcement::ALL {
                let s = posterior_strategic(&prior, &RevelationStrategy::HONEST, a).unwrap();
                assert_eq!(s, posterior_naive(a));
            }
        }
    }
}
