use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside [0, 1]")]
    Domain { what: String, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("community prior sums to {sum}, expected 1")]
    PriorSum { sum: f64 },

    #[error("connection matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("{0}")]
    InvalidParams(String),

    #[error("distortion {requested} is infeasible; the boundary is {boundary}")]
    Infeasible { requested: f64, boundary: f64 },

    #[error("distortion must be nonnegative and finite, got {0}")]
    NegativeDistortion(f64),

    #[error("instance too large for the oracle: {0}")]
    InstanceTooLarge(String),

    #[error("oracle did not converge after {iterations} sweeps")]
    NonConvergence { iterations: usize },

    #[error("graph size mismatch: {left} vs {right} nodes")]
    GraphSizeMismatch { left: usize, right: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
