use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the models and numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A model or solver parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed on {what}: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        what: &'static str,
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    /// The typical GBS has no associated aircraft in this realization.
    #[error("no serving link: the typical GBS has no associated aircraft")]
    NoServingLink,

    /// Every Monte Carlo trial was discarded.
    #[error("all {trials} Monte Carlo trials were discarded")]
    AllDiscarded { trials: usize },

    /// Time stepping produced a non-finite field or broke its stability limit.
    #[error("solver unstable at t = {time:e}: {condition}")]
    Unstable { time: f64, condition: String },

    /// Array shapes do not agree.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// An operation required data that was empty.
    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Training loss became non-finite.
    #[error("training diverged at round {round}: loss {loss}")]
    Diverged { round: u64, loss: f64 },

    /// A tabulated CDF is not non-decreasing.
    #[error("CDF is not monotone at tau = {tau:e} ({prev} > {next})")]
    NonMonotoneCdf { tau: f64, prev: f64, next: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
