use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("malformed config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid value `{value}` for `{key}`: {message}")]
    BadValue { key: String, value: String, message: String },
    #[error("missing required config key `{0}`")]
    MissingKey(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] ridgesplit_core::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 for usage and configuration problems, 2 for failed checks, 3 for
    /// everything that goes wrong while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::UnknownKey(_)
            | CliError::Syntax { .. }
            | CliError::BadValue { .. }
            | CliError::MissingKey(_)
            | CliError::Constraint(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Core(_) | CliError::ThreadPool(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
