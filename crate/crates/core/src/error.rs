use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates an operation's precondition.
    #[error("{0}")]
    InvalidParameter(String),

    /// Quadrature or panel integration failed to reach its tolerance.
    #[error("{what} did not converge (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        what: &'static str,
        estimate: f64,
        error: f64,
    },

    /// Numerical inversion produced an unusable value.
    #[error("inversion failed at t = {t}: {reason}")]
    Inversion { t: f64, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for argument/domain errors, false for numerical failures.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::InvalidParameter(_))
    }
}
