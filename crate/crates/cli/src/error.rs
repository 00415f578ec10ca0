use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] homlab::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for solver failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use homlab::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidGrid(_) | E::InvalidParameter(_) | E::BallRadius { .. } | E::SkewAmplitude { .. } => 2,
                E::NotConverged { .. } | E::EnsembleFailed { .. } => 3,
                _ => 1,
            },
            _ => 1,
        }
    }
}
