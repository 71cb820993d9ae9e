use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error("validation error at `{key}`: {message}")]
    Validation { key: String, message: String },

    /// Quadrature or ODE failed to converge; carries the achieved error estimate.
    #[error("numerical failure in {context}: achieved error estimate {estimate:e}")]
    Numerical { context: String, estimate: f64 },

    #[error("insufficient resolution in {context}: {message}")]
    Resolution { context: String, message: String },

    #[error("singular matching for l={ell} at lambda={lambda:e}: numerator and denominator both vanish")]
    MatchingSingular { ell: u32, lambda: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("inconsistent spectrum for l={ell}: node count predicts {predicted} states, bracketing found {found}")]
    Inconsistency { ell: u32, predicted: usize, found: usize },

    #[error("non-integer winding {winding:.6} (distance {distance:.3e} to nearest integer); refine the grid or check for a zero-energy resonance")]
    NonIntegerWinding { winding: f64, distance: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::Numerical { .. } => "numerical",
            Error::Resolution { .. } => "resolution",
            Error::MatchingSingular { .. } => "matching_singular",
            Error::Range(_) => "range",
            Error::Inconsistency { .. } => "inconsistency",
            Error::NonIntegerWinding { .. } => "non_integer_winding",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
        }
    }
}
