use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the basis-generation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {achieved:.3e}, requested {requested:.3e})")]
    Convergence {
        iterations: usize,
        achieved: f64,
        requested: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("basis generation failed: {0}")]
    Generation(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
