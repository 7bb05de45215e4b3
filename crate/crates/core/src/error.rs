use thiserror::Error;

/// Errors raised across estimation, optimization, simulation and I/O.
#[derive(Debug, Error)]
pub enum LagoError {
    #[error("dataset contains no records")]
    EmptyDataset,

    #[error("centre indices must be contiguous 1..={expected}, centre {missing} has no records")]
    NonContiguousCentres { expected: usize, missing: usize },

    #[error("design matrix is rank deficient (condition number {condition_number:.3e}); collinear columns: {}", columns.join(", "))]
    RankDeficient {
        condition_number: f64,
        columns: Vec<String>,
    },

    #[error("averaged information matrix is singular")]
    SingularJ,

    #[error("weights have length {got}, expected {expected}")]
    WeightDimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("covariance block of the intervention coefficients is singular")]
    SingularBlock,

    #[error("only one arm is present in the dataset")]
    SingleArm,

    #[error("goal {goal} cannot be reached anywhere in the box")]
    Infeasible { goal: f64 },

    #[error("invalid constraint direction '{0}'")]
    InvalidDirection(String),

    #[error("correlation {0} is outside (-1, 1)")]
    RhoOutOfRange(f64),

    #[error("invalid value for '{key}': {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema violations:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown table '{0}' (expected table1, null_tables, table3, table4, table5, table6 or cubic_appendix)")]
    UnknownTable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LagoError {
    /// True for failures of the numerical pipeline as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LagoError::RankDeficient { .. }
                | LagoError::SingularJ
                | LagoError::SingularBlock
                | LagoError::Infeasible { .. }
                | LagoError::Numerical(_)
        )
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        LagoError::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, LagoError>;
