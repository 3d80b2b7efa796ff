//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error enum. Variants map onto the CLI exit-code classes:
/// configuration problems are reported by the binary itself, `Format`
/// through `Degenerate` are data/shape errors, `Numeric` covers guards
/// against division blow-ups and non-finite intermediates.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("transform error: {0}")]
    Transform(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
