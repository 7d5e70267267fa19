use thiserror::Error;

/// Errors raised by lattice construction, kernels and the benchmark drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid combination of options or dimensions. Raised before any
    /// large allocation happens.
    #[error("configuration error: {0}")]
    Config(String),

    /// An input PDF set contains a non-finite value.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A scalar argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The simulation produced a non-finite field.
    #[error("numerical failure at step {step}: {msg}")]
    Numerical { step: u64, msg: String },

    /// AA sub-steps were called out of order.
    #[error("parity violation: expected {expected} step")]
    Parity { expected: &'static str },

    #[error("allocation of {bytes} bytes failed")]
    Alloc { bytes: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
