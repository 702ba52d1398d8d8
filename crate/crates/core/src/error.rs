use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {time} is not a grid point of the path")]
    OffGrid { time: f64 },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("window exhausted: {0}")]
    WindowExhausted(String),

    #[error("empty extrema sequence")]
    EmptySequence,
}

impl Error {
    /// Whether the error stems from a numerical run rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::WindowExhausted(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {x}")))
    }
}

pub(crate) fn ensure_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}
