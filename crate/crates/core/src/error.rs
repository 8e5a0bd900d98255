//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("mesh format error at line {line}: {msg}")]
    MeshFormat { line: usize, msg: String },

    #[error("degenerate simplex (cell {cell}): {msg}")]
    Degenerate { cell: usize, msg: String },

    #[error("mesh consistency violated: {0}")]
    MeshConsistency(String),

    #[error("split construction failed: {0}")]
    SplitConstruction(String),

    #[error("fan ordering violates adjacency: {0}")]
    FanOrdering(String),

    #[error("{block} block is singular or not positive definite: {msg}")]
    SingularBlock { block: &'static str, msg: String },

    #[error("system is rank deficient: {0}")]
    RankDeficient(String),

    #[error("solver did not converge after {iterations} iterations (last residuals {tail:?})")]
    NonConvergence { iterations: usize, tail: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArg(msg.into())
    }
}
