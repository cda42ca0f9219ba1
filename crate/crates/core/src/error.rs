use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data or configuration rejected at validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// The requested initialization strategy cannot be used for this problem.
    #[error("initialization error: {0}")]
    Strategy(String),

    /// A numerical routine failed (non-finite objective, stalled backtracking, ...).
    #[error("computation error: {0}")]
    Computation(String),

    /// Debiasing could not be carried out.
    #[error("inference error: {0}")]
    Inference(String),

    /// A fit on the solution path failed.
    #[error("fit at lambda = {lambda:e} failed: {source}")]
    Path {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    /// Delimited-text input that could not be parsed.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error on {}: {message}", path.display())]
    Serialization { path: PathBuf, message: String },
}

impl Error {
    /// Process exit code for the command-line front end: 1 for input problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Computation(_) | Error::Inference(_) => 2,
            Error::Path { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
