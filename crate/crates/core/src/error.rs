use thiserror::Error;

use crate::spectral::MinCertificate;

/// Errors raised across the crate.
///
/// The variants line up with the process exit codes used by the command
/// line front end (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data is malformed or inconsistent (conflicting weights, bad lists).
    #[error("validation error: {0}")]
    Validation(String),

    /// An internal invariant failed. Should be unreachable.
    #[error("invariant breach: {0}")]
    Invariant(String),

    /// A floating point consistency check failed.
    #[error("numerical consistency error: {0}")]
    Numerical(String),

    /// The grid minimizer reached its resolution cap without finding a
    /// negative grid value.
    #[error("resolution exhausted at grid size {}: grid minimum {} is not negative", .0.grid_size, .0.grid_min)]
    ResolutionExhausted(Box<MinCertificate>),

    /// The branch-and-bound search ran out of nodes.
    #[error("node budget of {budget} exceeded; best independent set found has size {best_size} (not proven optimal)")]
    BudgetExceeded {
        budget: u64,
        best_size: usize,
        best_witness: Vec<usize>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// Process exit code: 2 validation, 3 invariant breach, 4 resolution
    /// exhausted, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Validation(_) | Error::BudgetExceeded { .. } => 2,
            Error::Invariant(_) | Error::Numerical(_) => 3,
            Error::ResolutionExhausted(_) => 4,
            Error::Io(_) | Error::Json(_) => 5,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
