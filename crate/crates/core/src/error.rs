use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SglError {
    #[error("block index {index} out of range (structure has {count} blocks)")]
    BlockOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, got {found} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no penalized blocks")]
    NoPenalizedBlocks,

    #[error("block {0} has unpenalized coordinates and can never be zero")]
    UnboundedLambda(usize),

    #[error("not a descent direction (delta = {0})")]
    NotDescent(f64),

    #[error("line search stalled (step below {min_step}), kkt residual {kkt}")]
    LineSearchStall { min_step: f64, kkt: f64 },

    #[error("{stage} loop exceeded {cap} iterations")]
    IterationCap { stage: &'static str, cap: usize },

    #[error("descent direction at zero vanished for block {0} although zero is not optimal")]
    ZeroDirection(usize),

    #[error("class {class} has no samples{context}")]
    EmptyClass { class: usize, context: String },

    #[error("constant {axis} {index} cannot be scaled to unit variance")]
    ConstantVector { axis: &'static str, index: usize },

    #[error("matrix is not symmetric")]
    Asymmetric,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("fold count {folds} invalid for {samples} samples")]
    InvalidFolds { folds: usize, samples: usize },
}

pub type Result<T> = std::result::Result<T, SglError>;
