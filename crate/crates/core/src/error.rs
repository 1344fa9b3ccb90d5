use thiserror::Error;

/// Errors raised by the estimation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("delay {0} outside the admissible range")]
    DelayOutOfRange(f64),

    #[error("sampled signal does not cover symbols {missing:?}")]
    InsufficientSupport { missing: Vec<usize> },

    #[error("quadrature did not converge at order {order} (last change {last_change:e})")]
    QuadratureNotConverged { order: usize, last_change: f64 },

    #[error("Fisher information is not positive ({0:e})")]
    NonPositiveFisher(f64),

    #[error("log-likelihood is flat over the delay grid")]
    FlatLikelihood,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
