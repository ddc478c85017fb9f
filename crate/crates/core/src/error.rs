use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure of a single objective evaluation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("objective returned a non-finite value {value} at iteration {iteration}")]
    NonFinite { iteration: usize, value: f64 },
    #[error("failed to spawn `{command}`: {message}")]
    Spawn { command: String, message: String },
    #[error("command timed out after {seconds}s\n--- stdout ---\n{stdout}\n--- stderr ---\n{stderr}")]
    Timeout {
        seconds: f64,
        stdout: String,
        stderr: String,
    },
    #[error("command exited with code {code:?}\n--- stdout ---\n{stdout}\n--- stderr ---\n{stderr}")]
    ExitStatus {
        code: Option<i32>,
        stdout: String,
        stderr: String,
    },
    #[error("could not parse objective from last stdout line {line:?}\n--- stdout ---\n{stdout}\n--- stderr ---\n{stderr}")]
    Unparseable {
        line: String,
        stdout: String,
        stderr: String,
    },
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    IllConditioned { jitter: f64 },
    #[error("evaluation failed at iteration {iteration}: {source}")]
    Evaluation {
        iteration: usize,
        #[source]
        source: EvalError,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no valid traces found in {0}")]
    EmptyInput(PathBuf),
    #[error("malformed trace {path}: {message}")]
    MalformedTrace { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
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
}
