//! Particle-based Monte Carlo simulation of molecules released from a point
//! transmitter and absorbed by a fully absorbing spherical receiver.
//!
//! Four absorption criteria are available (see [`Algorithm`]); every run is
//! compared against the closed-form absorbed fraction in [`math`].

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod math;
pub mod output;
pub mod rng;
pub mod stats;

pub use config::{
    Algorithm, DistributionResult, MoleculeState, MoleculeStatus, ReceiverGeometry,
    SimulationConfig, TimeSeriesResult, Vec3,
};
pub use engine::{run_trial, run_trials, Decision, TrialState};
pub use error::{ConfigError, Error, Result};
pub use rng::RandomStream;
