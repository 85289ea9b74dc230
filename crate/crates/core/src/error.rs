//! Error types for matrix construction and the solvers.

use thiserror::Error;

/// Rejections raised while building or combining matrices.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix has no rows")]
    Empty,
    #[error("entries ({row}, {col}) and ({col}, {row}) differ by {gap:e}, beyond the symmetry tolerance")]
    AsymmetricBeyondTolerance { row: usize, col: usize, gap: f64 },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid factor shape: need 1 <= k <= n, got n={n}, k={k}")]
    InvalidShape { n: usize, k: usize },
    #[error("a multiplex network needs at least one layer")]
    NoLayers,
    #[error("layer {layer} has {found} nodes, expected {expected}")]
    LayerSizeMismatch {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("label {label} at position {index} is not below k={k}")]
    LabelOutOfRange { index: usize, label: usize, k: usize },
    #[error("expected {expected} labels or names, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Failures raised by factorization and fusion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("tri-factorization requires a mixing matrix")]
    MissingCentroid,
    #[error("mixing matrix sign mode does not match the method")]
    SignModeMismatch,
    #[error("Gram matrix is singular even after ridge regularization")]
    SingularGram,
    #[error("factor contains NaN")]
    NaNInput,
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
}
