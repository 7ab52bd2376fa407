use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}; run `campc offline` with the same configuration first")]
    Artifact(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 usage, 2 verification failure, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Artifact(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) | CliError::Json(_) | CliError::Csv(_) => 3,
        }
    }
}

impl From<campc_model::ModelError> for CliError {
    fn from(e: campc_model::ModelError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<campc_reach::ReachError> for CliError {
    fn from(e: campc_reach::ReachError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<campc_sim::SimError> for CliError {
    fn from(e: campc_sim::SimError) -> Self {
        match e {
            campc_sim::SimError::Config(msg) => CliError::Usage(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
