use thiserror::Error;

use crate::jcr::SolverStats;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation. `key` names the offending field.
    #[error("invalid value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// Exhaustive enumeration would exceed the configured combination cap.
    #[error("exhaustive search refused: {combinations} combinations exceed the cap of {cap}{}",
        .context.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    CapExceeded {
        combinations: u128,
        cap: u128,
        context: Option<String>,
    },

    #[error(
        "LP solver failed to converge after {} iterations (relative gap {:.3e}, primal residual {:.3e}, dual residual {:.3e})",
        .0.iterations, .0.relative_gap, .0.primal_residual, .0.dual_residual
    )]
    SolverFailure(SolverStats),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::CapExceeded { .. } => 3,
            Error::SolverFailure(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
