use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OscmError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("{what}: {requested} exceeds the limit of {limit}")]
    Capacity {
        what: String,
        requested: u64,
        limit: u64,
    },

    #[error("window too wide: maximum active set has {width} vertices, cap is {cap}")]
    WindowTooWide { width: usize, cap: usize },

    #[error("no solution with at most {max_k} crossings above the lower bound")]
    NotFound { max_k: u64 },

    #[error("rank {k} out of range for layer {layer} of {n} (valid 1..={count})")]
    RankOutOfRange {
        n: usize,
        layer: usize,
        k: u64,
        count: u64,
    },

    #[error("precedence relation contains a cycle")]
    Cycle,

    #[error("deadline exceeded")]
    Timeout,

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, OscmError>;
