use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frequency mismatch: {left} rad/s vs {right} rad/s")]
    FrequencyMismatch { left: f64, right: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("harmonic order {n} is not allowed here: {reason}")]
    HarmonicOrder { n: u32, reason: &'static str },

    #[error("element {kind} does not support {operation}")]
    UnsupportedElement {
        kind: String,
        operation: &'static str,
    },

    #[error("numerical verification failed: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// `true` for failures caused by bad input rather than by a numerical check.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}
