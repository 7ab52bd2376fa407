use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Campc(#[from] campc::CampcError),
    #[error(transparent)]
    Reach(#[from] campc_reach::ReachError),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("x0 infeasible: the MPC problem has no solution at the initial state")]
    InfeasibleInitialState,
    #[error("traces differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
