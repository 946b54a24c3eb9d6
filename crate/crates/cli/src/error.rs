use std::path::PathBuf;

use sgl::SglError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    /// Malformed input file; `line` is one-based.
    #[error("{}:{line}: {message}", path.display())]
    Input { path: PathBuf, line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Numeric(SglError),

    /// Screening changed the solution.
    #[error("screening changed the solution: max difference {difference:e} at alpha {alpha}")]
    ScreeningMismatch { alpha: f64, difference: f64 },

    #[error("{0} screened blocks failed the full zero test")]
    ScreeningViolation(usize),
}

impl CliError {
    /// Process exit code: 2 for bad input or configuration, 1 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Input { .. } | CliError::Io { .. } => 2,
            CliError::Numeric(_) | CliError::ScreeningMismatch { .. } | CliError::ScreeningViolation(_) => 1,
        }
    }
}

impl From<SglError> for CliError {
    fn from(e: SglError) -> Self {
        match e {
            SglError::InvalidParameter(_)
            | SglError::DimensionMismatch { .. }
            | SglError::EmptyClass { .. }
            | SglError::ConstantVector { .. }
            | SglError::InvalidFolds { .. }
            | SglError::NoPenalizedBlocks
            | SglError::UnboundedLambda(_) => CliError::Validation(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
