use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied value failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Boundary predicates or scenario settings do not fit the mesh.
    #[error("configuration error: {0}")]
    Config(String),

    /// The discrete problem cannot have a unique solution.
    #[error("solvability error: {0}")]
    Solvability(String),

    /// An internal invariant was violated by the data handed to an operator.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    /// A failure during time stepping, tagged with the step at which it happened.
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn at_step(self, step: usize) -> Self {
        match self {
            Error::Step { .. } => self,
            other => Error::Step {
                step,
                source: Box::new(other),
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Convergence { .. } | Error::Consistency(_) | Error::Solvability(_) => true,
            Error::Step { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
