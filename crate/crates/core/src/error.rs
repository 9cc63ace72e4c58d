use thiserror::Error;

use crate::factor::VarId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("sample interval must be positive, got {0}")]
    NonPositiveInterval(f64),

    #[error("{0} is not symmetric positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("{0} is not symmetric positive semi-definite")]
    NotPositiveSemiDefinite(&'static str),

    #[error("innovation covariance is singular (condition number {condition:e})")]
    SingularInnovation { condition: f64 },

    #[error("normal equations are rank deficient (smallest singular value {smallest:e}, largest {largest:e})")]
    RankDeficient { smallest: f64, largest: f64 },

    #[error("variables {0:?} are not anchored by any prior factor")]
    Unanchored(Vec<VarId>),

    #[error("unknown variable {0}")]
    UnknownVariable(VarId),

    #[error("variable {0} already exists in the window")]
    DuplicateVariable(VarId),

    #[error("block selected for marginalization is singular")]
    SingularMarginal,

    #[error("measurement model is singular: {0}")]
    Singularity(String),

    #[error("objective increased from {before:e} to {after:e} after exhausting step halving")]
    ObjectiveIncrease { before: f64, after: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("estimate series is empty")]
    EmptySeries,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that come out of the numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_)
                | Error::NotPositiveSemiDefinite(_)
                | Error::SingularInnovation { .. }
                | Error::RankDeficient { .. }
                | Error::Unanchored(_)
                | Error::SingularMarginal
                | Error::Singularity(_)
                | Error::ObjectiveIncrease { .. }
        )
    }
}
