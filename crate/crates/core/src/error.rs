use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {id} out of range for a graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("edge ({0}, {1}) has a non-finite weight")]
    NonFiniteWeight(usize, usize),

    #[error("node {0} has no self-loop; call add_self_loops first")]
    MissingSelfLoop(usize),

    #[error("degree exponents must be finite (alpha = {alpha}, beta = {beta})")]
    NonFiniteExponent { alpha: f64, beta: f64 },

    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("pair ({0}, {1}) indexes past the end of the encodings")]
    PairOutOfRange(usize, usize),

    #[error("tape value {0} is produced but never consumed")]
    UnconsumedOutput(usize),

    #[error("malformed tape: {0}")]
    Tape(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("graph too small: {0}")]
    GraphTooSmall(String),

    #[error("{what} did not converge within {iters} iterations")]
    NoConvergence { what: &'static str, iters: usize },

    #[error("Katz series diverges: decay * spectral radius is about {0:.4}")]
    Divergence(f64),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NoConvergence { .. } | Error::Divergence(_) => ErrorClass::Numerical,
            Error::InvalidConfig(_) | Error::NonFiniteExponent { .. } => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}
