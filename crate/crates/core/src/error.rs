//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to load mesh: {0}")]
    Load(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("mass properties require a watertight mesh: {0}")]
    MassProperties(String),

    #[error("convex decomposition could not meet the volume tolerance: coverage {coverage:.4} with {pieces} pieces")]
    Decomposition {
        coverage: f64,
        pieces: usize,
        /// Best attempt so far; callers may decide to use it anyway.
        best: crate::geometry::ConvexPieceSet,
    },

    #[error("simulation diverged: non-finite state on body {body} at step {step}")]
    SimulationDiverged { body: usize, step: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
