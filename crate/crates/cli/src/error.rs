use thiserror::Error;

use crate::format::fmt_sig;

/// CLI failure, carrying its exit code class.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, flags or input sizes: exit 2.
    #[error("{0}")]
    Config(String),
    /// Computation or infeasibility: exit 1.
    #[error("{0}")]
    Compute(String),
    /// Oracle failed to converge: exit 3.
    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<sbmrd::Error> for CliError {
    fn from(err: sbmrd::Error) -> Self {
        use sbmrd::Error as E;
        match err {
            E::Infeasible {
                requested,
                boundary,
            } => CliError::Compute(format!(
                "distortion {} exceeds the boundary {}",
                fmt_sig(requested),
                fmt_sig(boundary)
            )),
            E::NonConvergence { .. } => CliError::NonConvergence(err.to_string()),
            E::Domain { .. }
            | E::DimensionMismatch { .. }
            | E::PriorSum { .. }
            | E::Asymmetric { .. }
            | E::InvalidParams(_)
            | E::NegativeDistortion(_)
            | E::InstanceTooLarge(_)
            | E::Parse { .. } => CliError::Config(err.to_string()),
            E::GraphSizeMismatch { .. } => CliError::Compute(err.to_string()),
        }
    }
}
