use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid accuracy levels: need 0.5 < p_low < p_high <= 1, got p_low = {p_low}, p_high = {p_high}")]
    InvalidAccuracy { p_high: f64, p_low: f64 },

    #[error("invalid worker counts: need 1 <= k_low < k_high <= n_workers, got k_low = {k_low}, k_high = {k_high}, n_workers = {n_workers}")]
    InvalidCounts {
        n_workers: usize,
        k_high: usize,
        k_low: usize,
    },

    #[error("effort cost must be nonnegative, got {0}")]
    NegativeCost(f64),

    #[error("accuracy valuation beta must be nonnegative, got {0}")]
    InvalidBeta(f64),

    #[error("invalid belief ({mu_high}, {mu_low}): components must lie in [0, 1] and sum to 1")]
    InvalidBelief { mu_high: f64, mu_low: f64 },

    #[error("degenerate prior mu_high = {0}: strategic workers need 0 < mu_high < 1")]
    DegeneratePrior(f64),

    #[error("{what} = {value} is not a probability in [0, 1]")]
    OutOfRangeProbability { what: &'static str, value: f64 },

    #[error("empty input: at least one voter is required")]
    EmptyInput,

    #[error(
        "announcement {0:?} has zero probability under the given prior and revelation strategy"
    )]
    UnreachableAnnouncement(crate::model::Announcement),

    #[error("no worker of type {0:?} can exist under the given belief")]
    AbsentWorkerType(crate::model::WorkerType),

    #[error("no candidate equilibrium Pareto-dominates all others among {0:?}")]
    NoDominant(Vec<crate::model::SneKind>),

    #[error("exhaustive enumeration limited to {max} workers, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("grid step {0} must be positive and divide 1 exactly")]
    InvalidGridStep(f64),

    #[error("trial count must be at least 1")]
    ZeroTrials,

    #[error("profile contexts disagree: {0}")]
    ContextMismatch(&'static str),
}
