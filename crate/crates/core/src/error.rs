//! Error taxonomy shared by all modules.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the numerical kernels and model evaluators.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced a result that cannot be trusted at the working
    /// precision (for instance a nonpositive weight from an alternating sum).
    /// Callers may retry with more bits.
    #[error("insufficient precision: {0}")]
    Precision(String),

    /// A numerical procedure (quadrature, series summation) failed to
    /// converge within its budget. Carries diagnostics for the caller.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A precomputed table is too small for the request.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The parameter combination is outside the implemented range. This is
    /// reported explicitly rather than returning a silently wrong value.
    #[error("unsupported parameters: {0}")]
    Unsupported(String),
}

impl Error {
    /// True when retrying at higher precision could plausibly succeed.
    pub fn is_precision(&self) -> bool {
        matches!(self, Error::Precision(_))
    }
}
