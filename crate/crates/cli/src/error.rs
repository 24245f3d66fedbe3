use std::path::PathBuf;

use rowsolve::oracle::BoundLedger;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config {path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("bound verification failed:\n{0}")]
    Verification(Box<BoundLedger>),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] rowsolve::Error),
}

impl CliError {
    /// 0 success, 1 verification failure, 2 usage error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) | CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Core(e) => core_exit_code(e),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

fn core_exit_code(e: &rowsolve::Error) -> i32 {
    use rowsolve::Error as E;
    match e {
        E::TheoremViolation(_) => 1,
        E::Numeric(_) | E::NotPositiveDefinite { .. } => 3,
        E::AtIteration { source, .. } => core_exit_code(source),
        _ => 2,
    }
}
