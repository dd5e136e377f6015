//! Solver for a three-stage crowdsourcing game with strategic information
//! revelation.
//!
//! The platform commits to a revelation strategy for announcing how many
//! high-accuracy workers it has (stage I), picks a consistency reward paid to
//! workers who agree with the majority of their peers (stage II), and the
//! workers decide whether to exert effort and how to report (stage III).
//! Stages are solved by backward induction: [`equilibrium`] for the workers,
//! [`platform`] for reward design and revelation.

pub mod beliefs;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod platform;
pub mod voting;

pub use error::{Error, Result};
pub use model::{
    validate_config, Announcement, Belief, RevelationStrategy, SneKind, State, ValidatedConfig,
    WorkerMode, WorkerPopulation, WorkerStrategy, WorkerType,
};
