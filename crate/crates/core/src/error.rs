use thiserror::Error;

/// Errors raised by the simulator.
///
/// The variants split into two families that the CLI maps onto distinct exit
/// codes: input/validation problems and numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside the protocol window [0, {tf}]")]
    TimeOutOfRange { t: f64, tf: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("sample grids differ: {0}")]
    GridMismatch(String),

    #[error("non-finite value in ADO {index:?} at t = {t}")]
    NonFinite { index: (usize, usize), t: f64 },

    #[error("not converged: {what} (last delta {delta:.3e}, tolerance {tol:.3e})")]
    NotConverged { what: String, delta: f64, tol: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::NotConverged { .. } | Error::InvalidDensity(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
