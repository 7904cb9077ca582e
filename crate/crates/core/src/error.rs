use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("marginal masses differ: {mu} vs {nu}")]
    MassMismatch { mu: Box<Scalar>, nu: Box<Scalar> },

    #[error("measure is not purely atomic (discretize it first)")]
    NotAtomic,

    #[error("quantile level {0} outside ]0, mass]")]
    QuantileOutOfRange(Box<Scalar>),

    #[error("order precondition violated: {relation} fails at t = {witness}")]
    OrderViolation {
        relation: &'static str,
        witness: Box<Scalar>,
    },

    #[error("plan does not couple the decomposed pair: {0}")]
    MarginalMismatch(String),

    #[error("iteration budget exhausted after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case tag used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::MassMismatch { .. } => "mass_mismatch",
            Error::NotAtomic => "not_atomic",
            Error::QuantileOutOfRange(_) => "quantile_out_of_range",
            Error::OrderViolation { .. } => "order_violation",
            Error::MarginalMismatch(_) => "marginal_mismatch",
            Error::NotConverged { .. } => "not_converged",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
        }
    }
}
