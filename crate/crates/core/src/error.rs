use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A state or matrix violates a structural invariant (symmetry, physicality, shape).
    #[error("validation error: {0}")]
    Validation(String),

    /// An eigen-solver or other numerical kernel failed.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The requested quantity is unbounded for this input (e.g. Fisher information of a pure state).
    #[error("divergence: {0}")]
    Divergence(String),

    /// A self-check on a numerical estimate (extrapolation, step doubling) failed.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// The Fock cutoff is too small; `leak` is the measured population outside the trusted range.
    #[error("cutoff error: {msg} (measured leak {leak:.3e})")]
    Cutoff { msg: String, leak: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
