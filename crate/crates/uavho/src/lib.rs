//! UAV cellular handover workbench.
//!
//! Simulates a UAV flying predetermined 3D trajectories through a grid of
//! terrestrial base stations under a 3GPP urban-macro aerial channel model,
//! and compares handover policies on the resulting handover/outage trade-off:
//! a DQN/DDQN agent trained online, a weight-averaged global model fine-tuned
//! onto unseen paths, and three classical baselines (greedy, hysteresis+TTT,
//! minimum predicted outage).
//!
//! Modules mirror the pipeline stages:
//!
//! * [`channel`] - pure link-budget math: LoS probability, path loss, SINR.
//! * [`env`] - scenario geometry, flight paths, and the episode environment.
//! * [`qnet`] - a minimal dense network with backprop and serialization.
//! * [`agent`] - the replay-buffer Q-learning loop (DQN and DDQN targets).
//! * [`transfer`] - weight averaging, layer-frozen fine-tuning, similarity.
//! * [`baselines`] - greedy, hysteresis/time-to-trigger, and MOP policies.
//! * [`eval`] - episode runner, aggregation, threshold sweeps, CSV export.
//! * [`cli`] - the `uavho` command-line front end.
//!
//! All randomness flows from explicit integer seeds through [`seed`]; every
//! stage is bit-reproducible for a fixed seed at any parallelism level.

// Validation throughout uses negated comparisons (`!(x > 0.0)`) so that NaN
// fails closed; the un-negated forms clippy suggests would accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod baselines;
pub mod channel;
pub mod cli;
pub mod config;
pub mod env;
pub mod eval;
pub mod qnet;
pub mod seed;
pub mod transfer;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Physically impossible or out-of-domain channel input.
    #[error("channel domain error: {0}")]
    Domain(String),
    /// Scenario or flight-path validation failure.
    #[error("invalid scenario: {0}")]
    Scenario(String),
    /// Episode misuse (acting on a finished episode, bad action index).
    #[error("episode error: {0}")]
    Episode(String),
    /// Tensor shape mismatch in the network engine.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Malformed or incompatible weight document.
    #[error("weight document error: {0}")]
    WeightDoc(String),
    /// Non-finite loss or parameters during training.
    #[error("training diverged: {0}")]
    Divergence(String),
    /// Bad configuration value.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed CSV or text artifact.
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
