use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::gp::GpStateDump;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration value is missing, malformed or out of range. `key`
    /// names the offending setting.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Cholesky breakdown that survived the whole jitter ladder.
    #[error("singular model: non-positive pivot at index {pivot} (jitter {jitter:e})")]
    SingularModel { pivot: usize, jitter: f64 },

    #[error("objective returned NaN at x = {x:?}")]
    ObjectiveNan { x: Vec<f64> },

    #[error("acquisition returned NaN at x = {x:?}")]
    AcquisitionNan { x: Vec<f64> },

    /// Surrogate update failed inside an optimization run; carries the model
    /// state just before the failing update.
    #[error("surrogate update failed at t = {t}: {source}")]
    ModelFailure {
        t: usize,
        source: Box<Error>,
        dump: Box<GpStateDump>,
    },
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
