//! Episode environment: scenario geometry, flight paths, observations,
//! actions, and reward.
//!
//! An episode replays one [`FlightPath`] step by step. At every step the
//! environment measures the SINR of every BS (each evaluated as if serving),
//! builds the three-slot candidate set, and lets a policy either keep the
//! serving BS or hand over. Outage and the handover penalty are scored on the
//! measurement the decision was made from; the UAV then advances one path
//! point.

mod episode;
mod flightpath;
mod scenario;

pub use episode::{
    apply_action, apply_serving, build_candidates, compute_reward, observe, reset, Action,
    CandidateSet, EnvState, StateVector, StepOutcome, STATE_DIM,
};
pub use flightpath::{
    generate_paths, generate_paths_with, load_path_csv, write_path_csv, FlightPath, PathGen,
    Phases,
};
pub use scenario::{BaseStation, RewardConfig, Scenario};
