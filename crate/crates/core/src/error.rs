use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: String,
        found: String,
    },

    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("user {user} has zero requirement on every resource in scenario {scenario}")]
    ZeroRequirement { scenario: usize, user: usize },

    #[error("parse error in {path} at line {line}, column {column}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("missing cell (scenario {scenario}, user {user}, resource {resource})")]
    MissingCell {
        scenario: String,
        user: String,
        resource: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not draw {wanted} distinct scenarios after {draws} draws")]
    DegenerateSupport { wanted: usize, draws: usize },

    #[error("inner problem infeasible: {0}")]
    InfeasibleInner(String),

    #[error("model infeasible: {0}")]
    InfeasibleModel(String),

    #[error("no convergence after {iterations} iterations (last gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("instance too large for the exhaustive oracle: {0}")]
    OracleTooLarge(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(
        context: impl Into<String>,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for the two infeasibility variants.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::InfeasibleInner(_) | Error::InfeasibleModel(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
