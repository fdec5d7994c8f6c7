use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad grid, out-of-range parameter, non-finite value.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A structural assumption of an operation is not satisfied
    /// (non-symmetric kernel, unbounded history, sign condition, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Modulation sampled outside the declared ellipticity band.
    #[error("kernel sandwich violated at {location}: value {value} not in [{lower}, {upper}]")]
    Sandwich {
        location: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    /// The residual certificate required by a comparison statement failed.
    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),

    /// Quadrature could not reach the requested tolerance.
    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// Policy iteration exceeded its sweep budget.
    #[error("policy iteration did not stabilise after {sweeps} sweeps at time index {time_index}: {dump}")]
    PolicyIteration {
        sweeps: usize,
        time_index: usize,
        dump: String,
    },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
