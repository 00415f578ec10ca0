use thiserror::Error;

/// Errors raised by the homogenization laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("ball radius {radius} outside the admissible range [0.5, {max}]")]
    BallRadius { radius: f64, max: f64 },

    #[error("skew amplitude {nu} outside the admissible range [0, {max}]")]
    SkewAmplitude { nu: f64, max: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate corrector Gram matrix (smallest eigenvalue {0:.3e})")]
    DegenerateGram(f64),

    #[error("partition: {0}")]
    Partition(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("{failed} of {total} realizations failed")]
    EnsembleFailed { failed: usize, total: usize },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
