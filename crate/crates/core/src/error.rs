use thiserror::Error;

use crate::geometry::StationId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} coordinates, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("communication graph is disconnected ({components} components)")]
    TopologyDisconnected { components: usize },

    #[error("stations {a} and {b} occupy the same point")]
    DegenerateGeometry { a: StationId, b: StationId },

    #[error("interference series diverges: path loss {alpha} must exceed growth dimension {gamma}")]
    DivergentSeries { alpha: f64, gamma: f64 },

    #[error("protocol order violation: {0}")]
    ProtocolOrder(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant `{invariant}` violated at round {round}: {detail}")]
    InvariantViolation {
        invariant: &'static str,
        round: u64,
        detail: String,
    },

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
