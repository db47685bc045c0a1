use thiserror::Error;

use crate::model::RoutingModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("appointments decrease at position {index} ({previous} -> {current})")]
    DecreasingAppointments {
        index: usize,
        previous: f64,
        current: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("{model:?} routing is infeasible with {teams} teams: {reason}")]
    Infeasible {
        model: RoutingModel,
        teams: usize,
        reason: String,
    },

    #[error("no feasible candidate solution for this instance")]
    NoCandidate,

    #[error("document error: {0}")]
    Document(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
