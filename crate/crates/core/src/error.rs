use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver stack and the harness.
#[derive(Debug, Error)]
pub enum FaError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An iterate left the strictly feasible set (L or S not positive definite).
    #[error("infeasible point: {0}")]
    InfeasiblePoint(String),

    /// The data itself cannot define a problem, e.g. a singular sample covariance.
    #[error("infeasible data: {0}")]
    InfeasibleData(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

impl FaError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        FaError::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        FaError::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 = invalid configuration, 3 = I/O, 4 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            FaError::InvalidDimension(_)
            | FaError::Shape(_)
            | FaError::InvalidInput(_)
            | FaError::Parameter { .. }
            | FaError::InvalidConfig { .. } => 2,
            FaError::Io { .. } | FaError::Parse { .. } => 3,
            FaError::InfeasiblePoint(_)
            | FaError::InfeasibleData(_)
            | FaError::NumericalBreakdown(_) => 4,
        }
    }
}

pub type Result<T, E = FaError> = std::result::Result<T, E>;
