use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series hit its term cap before meeting the tolerance.
    #[error("series did not converge after {terms} terms (partial sum {partial:e})")]
    Convergence { partial: f64, terms: usize },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    Quadrature {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    /// The truncation window of a chain was too narrow for the requested accuracy.
    #[error("truncation window too small: {lost:e} probability mass lost (budget {budget:e})")]
    WindowTooSmall { lost: f64, budget: f64 },

    /// Invalid configuration of a solver or simulation.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
