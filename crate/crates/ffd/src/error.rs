//! Error type shared across the crate.
//!
//! Every failure carries a short machine-readable code (stable across
//! releases, used by the CLI for its one-line diagnostics) and a lowercase
//! human-readable detail message.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FfdError {
    /// Invalid argument or configuration value.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Request exceeds a hard resource cap (e.g. dense operators above 12 sites).
    #[error("resource limit: {0}")]
    Resource(String),
    /// The computed spectrum violates the structure the model guarantees
    /// (complex or nonnegative squared roots, wrong polynomial degree, ...).
    #[error("spectral structure violation: {0}")]
    SpectralStructure(String),
    /// Distinct single-particle roots collide within tolerance.
    #[error("degenerate spectrum: {0}")]
    Degeneracy(String),
    /// Internal cross-check failed (realness, completeness, normalization).
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl FfdError {
    /// Stable short code for CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            FfdError::Argument(_) => "ARG",
            FfdError::Resource(_) => "RESOURCE",
            FfdError::SpectralStructure(_) => "SPECTRUM",
            FfdError::Degeneracy(_) => "DEGENERACY",
            FfdError::Consistency(_) => "CONSISTENCY",
            FfdError::Io(_) => "IO",
        }
    }
}

pub type FfdResult<T> = Result<T, FfdError>;
