//! Domain types shared by every stage of the game.
//!
//! The worker side is a population of `n_workers` workers, `k` of which are
//! high-accuracy. `k` takes one of two values, `k_high` or `k_low`; the
//! platform observes which one is realized, the workers only hold a belief
//! over the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for probability identities.
pub const PROB_TOL: f64 = 1e-12;

/// Realized number of high-accuracy workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    High,
    Low,
}

impl State {
    pub const ALL: [State; 2] = [State::High, State::Low];
}

/// The value of `k` announced by the platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Announcement {
    High,
    Low,
}

impl Announcement {
    pub const ALL: [Announcement; 2] = [Announcement::High, Announcement::Low];

    /// The state this announcement claims.
    pub fn claimed(self) -> State {
        match self {
            Announcement::High => State::High,
            Announcement::Low => State::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerType {
    High,
    Low,
}

impl WorkerType {
    pub const ALL: [WorkerType; 2] = [WorkerType::High, WorkerType::Low];
}

/// A worker's combined effort and reporting choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerStrategy {
    /// `(0, rd)`: no effort, report a fair coin flip.
    NoEffortRandom,
    /// `(1, 1)`: exert effort, report the estimate.
    EffortTruthful,
    /// `(1, -1)`: exert effort, report the opposite of the estimate.
    EffortUntruthful,
}

impl WorkerStrategy {
    pub const ALL: [WorkerStrategy; 3] = [
        WorkerStrategy::NoEffortRandom,
        WorkerStrategy::EffortTruthful,
        WorkerStrategy::EffortUntruthful,
    ];

    pub fn exerts_effort(self) -> bool {
        !matches!(self, WorkerStrategy::NoEffortRandom)
    }

    /// Probability that the reported solution is correct for a worker whose
    /// effortful estimate is correct with probability `accuracy`.
    pub fn report_accuracy(self, accuracy: f64) -> f64 {
        match self {
            WorkerStrategy::NoEffortRandom => 0.5,
            WorkerStrategy::EffortTruthful => accuracy,
            WorkerStrategy::EffortUntruthful => 1.0 - accuracy,
        }
    }
}

/// Symmetric equilibrium profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SneKind {
    /// n-SNE: nobody exerts effort.
    #[serde(rename = "n")]
    NoEffort,
    /// f-SNE: everybody exerts effort and reports truthfully.
    #[serde(rename = "f")]
    Full,
    /// p-SNE: only high-accuracy workers exert effort.
    #[serde(rename = "p")]
    Partial,
}

impl SneKind {
    pub const ALL: [SneKind; 3] = [SneKind::NoEffort, SneKind::Full, SneKind::Partial];

    /// Strategy every worker of type `worker_type` plays in this profile.
    pub fn strategy(self, worker_type: WorkerType) -> WorkerStrategy {
        match (self, worker_type) {
            (SneKind::NoEffort, _) => WorkerStrategy::NoEffortRandom,
            (SneKind::Full, _) => WorkerStrategy::EffortTruthful,
            (SneKind::Partial, WorkerType::High) => WorkerStrategy::EffortTruthful,
            (SneKind::Partial, WorkerType::Low) => WorkerStrategy::NoEffortRandom,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SneKind::NoEffort => "n",
            SneKind::Full => "f",
            SneKind::Partial => "p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerMode {
    /// Workers update their prior by Bayes' rule.
    Strategic,
    /// Workers take the announcement at face value.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerPopulation {
    pub n_workers: usize,
    pub k_high: usize,
    pub k_low: usize,
    pub p_high: f64,
    pub p_low: f64,
    pub effort_cost: f64,
}

impl WorkerPopulation {
    pub fn new(
        n_workers: usize,
        k_high: usize,
        k_low: usize,
        p_high: f64,
        p_low: f64,
        effort_cost: f64,
    ) -> Result<Self> {
        let pop = WorkerPopulation {
            n_workers,
            k_high,
            k_low,
            p_high,
            p_low,
            effort_cost,
        };
        pop.validate()?;
        Ok(pop)
    }

    pub fn validate(&self) -> Result<()> {
        // Negated comparisons so NaN fails.
        if !(self.p_low > 0.5 && self.p_low < self.p_high && self.p_high <= 1.0) {
            return Err(Error::InvalidAccuracy {
                p_high: self.p_high,
                p_low: self.p_low,
            });
        }
        if !(1 <= self.k_low && self.k_low < self.k_high && self.k_high <= self.n_workers) {
            return Err(Error::InvalidCounts {
                n_workers: self.n_workers,
                k_high: self.k_high,
                k_low: self.k_low,
            });
        }
        if !(self.effort_cost >= 0.0 && self.effort_cost.is_finite()) {
            return Err(Error::NegativeCost(self.effort_cost));
        }
        Ok(())
    }

    /// Number of high-accuracy workers in `state`.
    pub fn k(&self, state: State) -> usize {
        match state {
            State::High => self.k_high,
            State::Low => self.k_low,
        }
    }

    /// Number of workers of `worker_type` when the realized state is `state`.
    pub fn type_count(&self, worker_type: WorkerType, state: State) -> usize {
        match worker_type {
            WorkerType::High => self.k(state),
            WorkerType::Low => self.n_workers - self.k(state),
        }
    }

    pub fn accuracy(&self, worker_type: WorkerType) -> f64 {
        match worker_type {
            WorkerType::High => self.p_high,
            WorkerType::Low => self.p_low,
        }
    }
}

/// Probability mass over the two candidate values of `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub mu_high: f64,
    pub mu_low: f64,
}

impl Belief {
    /// Belief putting mass `mu_high` on `k = k_high`.
    pub fn new(mu_high: f64) -> Result<Self> {
        Belief::from_parts(mu_high, 1.0 - mu_high)
    }

    pub fn from_parts(mu_high: f64, mu_low: f64) -> Result<Self> {
        let belief = Belief { mu_high, mu_low };
        belief.validate()?;
        Ok(belief)
    }

    /// Point mass on `state`.
    pub fn certain(state: State) -> Self {
        match state {
            State::High => Belief {
                mu_high: 1.0,
                mu_low: 0.0,
            },
            State::Low => Belief {
                mu_high: 0.0,
                mu_low: 1.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |x: f64| (0.0..=1.0).contains(&x);
        if !(in_range(self.mu_high)
            && in_range(self.mu_low)
            && (self.mu_high + self.mu_low - 1.0).abs() <= PROB_TOL)
        {
            return Err(Error::InvalidBelief {
                mu_high: self.mu_high,
                mu_low: self.mu_low,
            });
        }
        Ok(())
    }

    pub fn weight(&self, state: State) -> f64 {
        match state {
            State::High => self.mu_high,
            State::Low => self.mu_low,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.mu_high <= 0.0 || self.mu_high >= 1.0
    }
}

/// The platform's committed deception probabilities.
///
/// `eps_h` is the probability of announcing `k_high` when `k = k_low`;
/// `eps_l` the probability of announcing `k_low` when `k = k_high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevelationStrategy {
    pub eps_h: f64,
    pub eps_l: f64,
}

impl RevelationStrategy {
    pub const HONEST: RevelationStrategy = RevelationStrategy {
        eps_h: 0.0,
        eps_l: 0.0,
    };

    pub fn new(eps_h: f64, eps_l: f64) -> Result<Self> {
        for (what, value) in [("eps_h", eps_h), ("eps_l", eps_l)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRangeProbability { what, value });
            }
        }
        Ok(RevelationStrategy { eps_h, eps_l })
    }

    /// Probability of `announcement` given the realized `state`.
    pub fn announce_prob(&self, state: State, announcement: Announcement) -> f64 {
        match (state, announcement) {
            (State::High, Announcement::High) => 1.0 - self.eps_l,
            (State::High, Announcement::Low) => self.eps_l,
            (State::Low, Announcement::High) => self.eps_h,
            (State::Low, Announcement::Low) => 1.0 - self.eps_h,
        }
    }
}

/// A configuration that passed [`validate_config`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidatedConfig {
    pub pop: WorkerPopulation,
    pub prior: Belief,
    pub beta: f64,
    pub mode: WorkerMode,
    /// Set when a naive-mode prior puts all mass on one state.
    pub degenerate_prior: bool,
}

pub fn validate_config(
    pop: WorkerPopulation,
    prior: Belief,
    beta: f64,
    mode: WorkerMode,
) -> Result<ValidatedConfig> {
    pop.validate()?;
    prior.validate()?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidBeta(beta));
    }
    let degenerate = prior.is_degenerate();
    if degenerate && mode == WorkerMode::Strategic {
        return Err(Error::DegeneratePrior(prior.mu_high));
    }
    Ok(ValidatedConfig {
        pop,
        prior,
        beta,
        mode,
        degenerate_prior: degenerate,
    })
}

impl ValidatedConfig {
    pub fn revalidate(&self) -> Result<ValidatedConfig> {
        validate_config(self.pop, self.prior, self.beta, self.mode)
    }
}
