use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the grid engine and its I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance is not positive definite (|rho| = {rho} >= 1)")]
    NotPositiveDefinite { rho: f64 },

    #[error("position coincides with the sensor origin (distance {distance:e} m)")]
    SensorOrigin { distance: f64 },

    #[error("probability {0} is outside the open interval (0, 1)")]
    DegenerateProbability(f64),

    #[error("transfer fractions leaving cell ({ix}, {iy}) sum to {sum} > 1")]
    TransferOverflow { ix: usize, iy: usize, sum: f64 },

    #[error("timestamp {got} precedes the previous timestamp {previous}")]
    OutOfOrder { previous: f64, got: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("unknown sensor id {0}")]
    UnknownSensor(u32),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed user input (as opposed to failures
    /// while running an otherwise valid job).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Config { .. }
                | Error::InvalidParameter { .. }
                | Error::UnknownSensor(_)
                | Error::OutOfOrder { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
