use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants fall into three families (configuration, data, numeric) which
/// the command-line front end maps onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("column {index} ({name}) is constant and cannot be min-max normalized")]
    DegenerateColumn { index: usize, name: String },

    #[error("batch of {rows} rows is too small for a rank-{dim} covariance (need more than {dim})")]
    BatchTooSmall { rows: usize, dim: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("jacobi eigensolver did not converge (off-diagonal residual {residual:e})")]
    NotConverged { residual: f64 },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("covariance is singular along eigen-direction {index} (eigenvalue {value:e})")]
    SingularCovariance { index: usize, value: f64 },

    #[error("training diverged at epoch {epoch} (loss {loss:e})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("AUC is undefined: labels contain {positives} positives and {negatives} negatives")]
    UndefinedAuc { positives: usize, negatives: usize },
}

/// Broad classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::ContractViolation(_) | Error::DimensionMismatch { .. } => {
                ErrorKind::Config
            }
            Error::DegenerateInput(_)
            | Error::DegenerateColumn { .. }
            | Error::BatchTooSmall { .. }
            | Error::Parse { .. }
            | Error::Io { .. }
            | Error::UndefinedAuc { .. } => ErrorKind::Data,
            Error::NonFinite(_)
            | Error::NotConverged { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::SingularCovariance { .. }
            | Error::Diverged { .. } => ErrorKind::Numeric,
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
