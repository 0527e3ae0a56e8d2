use std::path::PathBuf;

use thiserror::Error;

/// Invariant violations detected by [`crate::SimulationConfig::validate`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("non-positive diffusion coefficient: {0} m^2/s")]
    NonPositiveDiffusion(f64),
    #[error("non-positive receiver radius: {0} m")]
    NonPositiveRadius(f64),
    #[error("transmitter inside/on receiver: distance {distance} m <= radius {radius} m")]
    TransmitterInsideReceiver { distance: f64, radius: f64 },
    #[error("non-positive time step: {0} s")]
    NonPositiveTimeStep(f64),
    #[error("number of molecules must be at least 1")]
    NoMolecules,
    #[error("number of steps must be at least 1")]
    NoSteps,
    #[error("number of trials must be at least 1")]
    NoTrials,
    #[error("max_resample_attempts must be at least 1")]
    NoResampleAttempts,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),

    #[error(
        "resampling exhausted for molecule {molecule} at step {step} after {attempts} attempts"
    )]
    ResampleExhausted {
        molecule: usize,
        step: usize,
        attempts: u32,
    },

    #[error("molecule at distance {distance} m is inside receiver of radius {radius} m")]
    InsideReceiver { distance: f64, radius: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
