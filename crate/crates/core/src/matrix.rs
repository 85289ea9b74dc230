//! Dense matrix types shared by every solver, plus the small kernels they
//! all lean on: sign splitting, tangent projection and seeded initialization.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::MatrixError;

/// Largest |a_ij - a_ji| that is averaged away instead of rejected.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-9;

/// Default floor added to update denominators.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Symmetric, entrywise non-negative adjacency matrix of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMatrix(DMatrix<f64>);

impl LayerMatrix {
    /// Validates `values`, averaging away asymmetry up to
    /// [`ASYMMETRY_TOLERANCE`].
    pub fn new(values: DMatrix<f64>) -> Result<Self, MatrixError> {
        let (rows, cols) = values.shape();
        if rows != cols {
            return Err(MatrixError::NonSquare { rows, cols });
        }
        if rows == 0 {
            return Err(MatrixError::Empty);
        }
        for j in 0..cols {
            for i in 0..rows {
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(MatrixError::NonFinite { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(MatrixError::NegativeEntry { row: i, col: j, value: v });
                }
            }
        }
        let mut sym = values;
        for i in 0..rows {
            for j in (i + 1)..rows {
                let (a, b) = (sym[(i, j)], sym[(j, i)]);
                let gap = (a - b).abs();
                if gap > ASYMMETRY_TOLERANCE {
                    return Err(MatrixError::AsymmetricBeyondTolerance { row: i, col: j, gap });
                }
                if gap > 0.0 {
                    let mean = 0.5 * (a + b);
                    sym[(i, j)] = mean;
                    sym[(j, i)] = mean;
                }
            }
        }
        Ok(Self(sym))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Non-negative n×k factor whose rows score node membership.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix(DMatrix<f64>);

impl FactorMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self, MatrixError> {
        let (n, k) = values.shape();
        if k == 0 || k > n {
            return Err(MatrixError::InvalidShape { n, k });
        }
        check_nonnegative(&values)?;
        Ok(Self(values))
    }

    /// Wraps solver output that is non-negative by construction.
    pub(crate) fn from_solver(values: DMatrix<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_nan() || *v >= 0.0));
        Self(values)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn k(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Sign convention of a mixing matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    Nonnegative,
    Mixed,
}

/// k×k matrix coupling communities in a tri-factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidMatrix {
    values: DMatrix<f64>,
    sign_mode: SignMode,
}

impl CentroidMatrix {
    pub fn new(values: DMatrix<f64>, sign_mode: SignMode) -> Result<Self, MatrixError> {
        let (rows, cols) = values.shape();
        if rows != cols {
            return Err(MatrixError::NonSquare { rows, cols });
        }
        if rows == 0 {
            return Err(MatrixError::Empty);
        }
        match sign_mode {
            SignMode::Nonnegative => check_nonnegative(&values)?,
            SignMode::Mixed => check_finite(&values)?,
        }
        Ok(Self { values, sign_mode })
    }

    pub(crate) fn from_solver(values: DMatrix<f64>, sign_mode: SignMode) -> Self {
        Self { values, sign_mode }
    }

    pub fn k(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn sign_mode(&self) -> SignMode {
        self.sign_mode
    }
}

/// Hard community labels, each below `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self, MatrixError> {
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(MatrixError::LabelOutOfRange { index, label, k });
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Node indices grouped by label; empty groups are kept.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (node, &label) in self.labels.iter().enumerate() {
            groups[label].push(node);
        }
        groups
    }
}

/// Layers over one shared node set.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexNetwork {
    layers: Vec<LayerMatrix>,
    node_names: Option<Vec<String>>,
    ground_truth: Option<ClusterAssignment>,
}

impl MultiplexNetwork {
    pub fn new(layers: Vec<LayerMatrix>) -> Result<Self, MatrixError> {
        let first = layers.first().ok_or(MatrixError::NoLayers)?.n();
        for (layer, m) in layers.iter().enumerate() {
            if m.n() != first {
                return Err(MatrixError::LayerSizeMismatch { layer, expected: first, found: m.n() });
            }
        }
        Ok(Self { layers, node_names: None, ground_truth: None })
    }

    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self, MatrixError> {
        if names.len() != self.n() {
            return Err(MatrixError::LengthMismatch { expected: self.n(), found: names.len() });
        }
        self.node_names = Some(names);
        Ok(self)
    }

    pub fn with_ground_truth(mut self, truth: ClusterAssignment) -> Result<Self, MatrixError> {
        if truth.len() != self.n() {
            return Err(MatrixError::LengthMismatch { expected: self.n(), found: truth.len() });
        }
        self.ground_truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.layers[0].n()
    }

    pub fn layers(&self) -> &[LayerMatrix] {
        &self.layers
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    pub fn ground_truth(&self) -> Option<&ClusterAssignment> {
        self.ground_truth.as_ref()
    }
}

/// Splits `m` into non-negative parts with `m == pos - neg`.
pub fn pos_neg_split(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let pos = m.map(|x| (x.abs() + x) / 2.0);
    let neg = m.map(|x| (x.abs() - x) / 2.0);
    (pos, neg)
}

/// Projects `grad` onto the tangent space at `h`: `grad - h (h^T grad)`.
pub fn natural_gradient(grad: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<DMatrix<f64>, MatrixError> {
    if grad.shape() != h.shape() {
        return Err(MatrixError::ShapeMismatch { expected: h.shape(), found: grad.shape() });
    }
    Ok(grad - h * (h.transpose() * grad))
}

/// Frobenius norm of `h^T h - I`.
pub fn orthonormality_residual(h: &DMatrix<f64>) -> f64 {
    let k = h.ncols();
    (h.transpose() * h - DMatrix::<f64>::identity(k, k)).norm()
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Overwrites column `j` with fresh draws on (0, 1], scaled to unit norm.
pub(crate) fn draw_column(rng: &mut ChaCha8Rng, h: &mut DMatrix<f64>, j: usize) {
    let mut col = h.column_mut(j);
    for v in col.iter_mut() {
        *v = 1.0 - rng.gen::<f64>();
    }
    let norm = col.norm();
    col /= norm;
}

pub(crate) fn draw_factor(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, k);
    for j in 0..k {
        draw_column(rng, &mut h, j);
    }
    h
}

/// Seeded strictly positive start with unit-norm columns.
pub fn init_factor(n: usize, k: usize, seed: u64) -> Result<FactorMatrix, MatrixError> {
    if k == 0 || k > n {
        return Err(MatrixError::InvalidShape { n, k });
    }
    let mut rng = seeded_rng(seed);
    Ok(FactorMatrix::from_solver(draw_factor(&mut rng, n, k)))
}

fn check_finite(m: &DMatrix<f64>) -> Result<(), MatrixError> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(MatrixError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn check_nonnegative(m: &DMatrix<f64>) -> Result<(), MatrixError> {
    check_finite(m)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] < 0.0 {
                return Err(MatrixError::NegativeEntry { row: i, col: j, value: m[(i, j)] });
            }
        }
    }
    Ok(())
}
