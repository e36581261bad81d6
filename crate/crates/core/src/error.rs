use thiserror::Error;

/// Errors raised across mesh construction, discretization and solves.
#[derive(Debug, Error)]
pub enum VemError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cell {cell}: {reason}")]
    InvalidCell { cell: usize, reason: String },

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error(
        "ambiguous rank decision: singular value {value:.3e} lies within a factor 10 of the cutoff {cutoff:.3e}"
    )]
    AmbiguousRank { value: f64, cutoff: f64 },

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("spectrum has no nonzero eigenvalue")]
    EmptySpectrum,

    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, VemError>;
