use std::path::PathBuf;

use multiplex_nmf::{EvalError, MatrixError, SolveError, SynthError};
use thiserror::Error;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Bad arguments, unreadable or malformed input.
pub const EXIT_INPUT: i32 = 2;
/// A NaN or infinite value appeared during solving.
pub const EXIT_NUMERICAL: i32 = 3;
/// The solver hit its iteration cap and `--strict` was given.
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("{path}: node `{node}` does not appear in the layer files")]
    UnknownNode { path: PathBuf, node: String },
    #[error("{path}: node `{node}` has no entry")]
    MissingNode { path: PathBuf, node: String },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{runs} solver run(s) stopped at the iteration cap without converging")]
    NotConverged { runs: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), line, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve(SolveError::NaNInput | SolveError::NonFiniteObjective { .. }) => EXIT_NUMERICAL,
            CliError::NotConverged { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_INPUT,
        }
    }
}
