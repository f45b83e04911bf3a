//! Fictitious play with Kalman-filtered opponent models for distributed
//! action selection in finite games.
//!
//! Each agent keeps, for every opponent, a Gaussian belief over a latent
//! propensity vector whose softmax is the opponent's mixed strategy. An
//! extended Kalman filter updates the belief from observed actions, and the
//! agent best-responds to the resulting strategy estimates. Classic
//! fictitious play, a particle-filter variant, and greedy/random baselines
//! are provided for comparison, together with the benchmark scenarios and a
//! seeded replication harness.

pub mod config;
pub mod error;
pub mod filters;
pub mod game;
pub mod harness;
pub mod learners;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use game::{Game, JointMixedProfile, MatrixGame, MixedStrategy, TieBreak};
