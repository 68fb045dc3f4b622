//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by any operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// File system failure, annotated with the offending path.
    #[error("i/o error on '{path}': {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed CSV content. `row` is the 1-based data row (0 for the header).
    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },
    /// Invalid argument, configuration or data shape.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A transform step could not be applied to the given matrix.
    #[error("transform error: {0}")]
    Transform(String),
    /// Randomization or confounding-diagnostic failure.
    #[error("design error: {0}")]
    Design(String),
    /// Model fitting failure.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
