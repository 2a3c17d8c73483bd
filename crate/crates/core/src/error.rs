use std::io;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Polygon or mesh invariants do not hold.
    #[error("validation failed: {0}")]
    Validation(String),

    /// Two polygon edges intersect.
    #[error("polygon is not simple: edges {first} and {second} intersect")]
    NonSimple { first: usize, second: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested discretization is too large to build.
    #[error("resource limit: {message} (estimated {estimated_elements} elements)")]
    Resource {
        message: String,
        estimated_elements: u64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The boundary trace of a field vanishes, so the Rayleigh quotient is undefined.
    #[error("vanishing boundary trace (boundary p-norm {0:e})")]
    VanishingTrace(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
