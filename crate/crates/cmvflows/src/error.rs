//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures reported by the numerical routines.
///
/// Variants distinguish invalid input ([`Error::Domain`], [`Error::SizeMismatch`],
/// [`Error::OutOfRange`], [`Error::NonGeneric`]) from numerical breakdown
/// ([`Error::NotConverged`], [`Error::Consistency`], [`Error::BoundaryApproach`]).
/// [`Error::Stage`] wraps another error with the name of the pipeline step that
/// produced it.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two operands have incompatible matrix sizes.
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch {
        /// Size required by the operation.
        expected: usize,
        /// Size actually supplied.
        found: usize,
    },

    /// An index or order parameter is outside its admissible range.
    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// Input violates a genericity assumption needed by the curve routines.
    #[error("non-generic data: {0}")]
    NonGeneric(String),

    /// An iterative method failed to reach its tolerance.
    #[error("{what} did not converge (achieved residual {residual:.3e})")]
    NotConverged {
        /// Description of the iteration.
        what: String,
        /// Best residual reached before giving up.
        residual: f64,
    },

    /// A computed result failed a built-in verification.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// An ODE trajectory came too close to the boundary of the polydisk.
    #[error("trajectory reached |alpha| = {max_modulus:.12} at t = {t}")]
    BoundaryApproach {
        /// Time of the last accepted state.
        t: f64,
        /// Largest coefficient modulus at that time.
        max_modulus: f64,
        /// States computed before the abort.
        partial: Box<crate::flows::Trajectory>,
    },

    /// Another error, labelled with the pipeline stage that raised it.
    #[error("{stage}: {source}")]
    Stage {
        /// Name of the failing stage.
        stage: &'static str,
        /// Underlying failure.
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps `self` with a stage label.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Returns the innermost error, skipping stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Extension for attaching stage labels to results.
pub trait StageExt<T> {
    /// Labels an error with the stage that produced it.
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
