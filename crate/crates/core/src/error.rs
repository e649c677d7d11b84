use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters are individually valid but inconsistent with each other.
    #[error("configuration error: {0}")]
    Config(String),

    /// A structured dictionary beam could not meet its gain threshold.
    #[error("infeasible gain threshold {threshold:.4} at angle {angle_deg:.3} deg (best attempt reached {achieved:.4})")]
    Infeasible { angle_deg: f64, threshold: f64, achieved: f64 },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    /// Malformed text artifact (matrix file, fingerprint database).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
