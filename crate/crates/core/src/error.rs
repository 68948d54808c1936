use thiserror::Error;

/// Failures surfaced by the simulation library.
///
/// `Domain`, `Degenerate` and `Contract` are physics/contract problems with
/// the inputs; `NonFinite` and `Convergence` are numeric failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KdError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("state undefined (0/0): {0}")]
    Degenerate(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(
        "fit did not converge after {iterations} iterations \
         (chi2 = {chi2:e}, damping = {damping:e}, last relative step = {last_step:e})"
    )]
    Convergence {
        iterations: usize,
        chi2: f64,
        damping: f64,
        last_step: f64,
    },
}

impl KdError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        KdError::Domain(msg.into())
    }

    /// True for failures of the numerics rather than of the physical inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, KdError::NonFinite(_) | KdError::Convergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, KdError>;
