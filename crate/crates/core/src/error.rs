use thiserror::Error;

use crate::quadrature::QuadratureEstimate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates an operation's precondition.
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    /// The configuration is legal but the requested quantity is undefined for it.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// Adaptive quadrature ran out of budget. Carries the best estimate found.
    #[error(
        "quadrature did not converge: value {} with error estimate {:e} after {} evaluations",
        .0.value, .0.abs_error_estimate, .0.evaluations
    )]
    Quadrature(QuadratureEstimate),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::Degenerate(_))
    }
}
