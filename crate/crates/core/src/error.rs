use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Visibility zero leaves the likelihood independent of every parameter.
    #[error("flat likelihood: visibility is zero, no parameter can be estimated")]
    FlatLikelihood,

    #[error("sample unreachable: detector efficiency is zero, no two-photon event can occur")]
    UnreachableSample,

    #[error("all {trials} trials failed (last failure: {last})")]
    AllTrialsFailed { trials: usize, last: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::DivisionByZero(_)
            | Error::FlatLikelihood
            | Error::UnreachableSample
            | Error::Parse(_) => 2,
            Error::NumericFailure(_) | Error::AllTrialsFailed { .. } => 3,
            Error::Io { .. } => 1,
        }
    }
}
