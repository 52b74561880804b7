use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A Toeplitz system turned out not to be positive definite.
    #[error("numerical conditioning: prediction error {prediction_error:e} at recursion step {step}")]
    Conditioning { step: usize, prediction_error: f64 },

    /// Zero channel gain on a subcarrier with no ZF regularization.
    #[error("singular channel at subcarrier {subcarrier}")]
    SingularChannel { subcarrier: usize },

    /// No finite value exists for the requested combination.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("target BER {target:e} not bracketed: simulated BER spans [{min_ber:e}, {max_ber:e}]")]
    InsufficientRange { target: f64, min_ber: f64, max_ber: f64 },

    /// Display already includes the inner message, so the inner error is not
    /// exposed as `source()`; use [`Error::root`] to reach it.
    #[error("{context}: {inner}")]
    Context { context: String, inner: Box<Error> },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), inner: Box::new(self) }
    }

    /// Strips any [`Error::Context`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { inner, .. } => inner.root(),
            other => other,
        }
    }
}
