use std::path::PathBuf;

use hk_core::HkError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {pointer:?}: {message}")]
    Config { pointer: String, message: String },

    #[error(transparent)]
    Solver(#[from] HkError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    /// 2 for solver failures, 3 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 3,
            CliError::Solver(e) => match e {
                HkError::NonConvergence { .. } | HkError::SingularSystem(_) => 2,
                HkError::InvalidSpec(_)
                | HkError::InvalidEpsilon(_)
                | HkError::Incommensurate { .. }
                | HkError::UnsupportedGrid(_)
                | HkError::UnsupportedDomain(_) => 3,
                HkError::Shape(_) | HkError::Degenerate(_) => 1,
            },
            CliError::Io { .. } | CliError::Verify(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
