//! Failure classes of the front-end and their exit codes.

use thiserror::Error;

/// Errors that end a run.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid configuration; exit status 2.
    #[error("config error: {0}")]
    Config(String),
    /// A library routine failed; exit status 3.
    #[error("numerical failure in {stage}: {source}")]
    Numerical {
        /// Command stage that failed.
        stage: &'static str,
        /// Library error.
        source: cmvflows::Error,
    },
    /// A verification report contains failures; exit status 3.
    #[error("verification failed: {0}")]
    Verification(String),
    /// Writing output failed; exit status 3.
    #[error("cannot write {path}: {source}")]
    Output {
        /// Target path.
        path: String,
        /// Underlying I/O error.
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Attaches a stage label to library results.
pub trait AtStage<T> {
    /// Converts a library error into [`CliError::Numerical`].
    fn at(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> AtStage<T> for cmvflows::Result<T> {
    fn at(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical { stage, source })
    }
}
