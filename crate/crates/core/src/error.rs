use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bag of size {size} exceeds the enumeration limit {limit}")]
    Capacity { size: usize, limit: usize },

    #[error("invalid crusade: {0}")]
    Structure(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("solver did not converge after {iterations} iterations (gap {gap:.3e}, decrement {decrement:.3e})")]
    Numeric {
        iterations: usize,
        gap: f64,
        decrement: f64,
    },

    #[error("stalled state at t = {time}: infected set nonempty but total event rate is zero")]
    Stalled { time: f64 },

    #[error("invariant violated at t = {time}: {message}")]
    InvariantViolation { time: f64, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
