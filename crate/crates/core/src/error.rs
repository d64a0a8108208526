//! Error type shared by every module.
//!
//! The CLI maps these onto process exit codes: configuration problems exit
//! with 2, numerical failures (solver, certification, singular systems) with
//! 3, and failed verification assertions with 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported norm combination: {0}")]
    UnsupportedNorms(String),

    #[error("grid has no node at t = 1 (needed by {0})")]
    MissingUnitNode(&'static str),

    #[error("singular moment system: {0}")]
    SingularMoments(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("near-optimality certification failed: cost {cost} exceeds 2 x bound {bound}")]
    CertificationFailure { cost: f64, bound: f64 },

    #[error("oracle limited to dim <= {max_dim}, n_nodes <= {max_nodes} (got dim {dim}, n_nodes {n_nodes})")]
    OracleTooLarge {
        dim: usize,
        n_nodes: usize,
        max_dim: usize,
        max_nodes: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numerical failures. Exit 1 (failed verification assertion) is not an
    /// error — the CLI produces it from a report with `pass = false`.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch(_)
            | Error::GridMismatch(_)
            | Error::UnsupportedNorms(_)
            | Error::MissingUnitNode(_)
            | Error::Io(_) => 2,
            Error::SolverFailure(_)
            | Error::CertificationFailure { .. }
            | Error::SingularMoments(_)
            | Error::OracleTooLarge { .. } => 3,
        }
    }
}
