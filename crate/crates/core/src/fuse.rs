//! Consensus factorization across layers, the merged-layer baseline and
//! hard cluster extraction.

use nalgebra::DMatrix;
use pathfinding::prelude::{kuhn_munkres, Matrix};
use rayon::prelude::*;

use crate::config::{ConsensusInit, MixingUpdate, SolverConfig};
use crate::descent::{descend, Descent};
use crate::error::{MatrixError, SolveError};
use crate::factorize::{
    closed_form_mixing, factorize, initial_mixing, ratio_update, rescue_columns, residual, schedule,
    symmetric_step, tri_mixing_step, FactorizeResult, Method,
};
use crate::matrix::{
    draw_factor, orthonormality_residual, pos_neg_split, seeded_rng, CentroidMatrix, ClusterAssignment,
    FactorMatrix, LayerMatrix, MultiplexNetwork, SignMode,
};

/// Resolution used when turning column cosines into integer matching weights.
const MATCH_SCALE: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct HardClusters {
    pub assignment: ClusterAssignment,
    /// Rows with no mass at all; they carry label 0.
    pub unassigned: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    /// Consensus factor.
    pub h: FactorMatrix,
    /// Per-layer factorizations, columns permuted to agree with layer 0.
    /// Empty for the merged baseline.
    pub layers: Vec<FactorizeResult>,
    /// Mixing matrices used by the final consensus objective.
    pub mixing: Option<Vec<CentroidMatrix>>,
    pub assignment: ClusterAssignment,
    pub unassigned: Vec<usize>,
    /// Collective objective at the start, then after every update. Except on
    /// the symmetric path, the consensus term is measured between the column
    /// spaces (orthonormal bases) so that rescaling the consensus cannot
    /// lower it.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// ‖HᵀH − I‖_F of the consensus factor.
    pub orthonormality_residual: f64,
}

impl FusionResult {
    pub fn per_layer_h(&self) -> Vec<&FactorMatrix> {
        self.layers.iter().map(|l| &l.h).collect()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the starting objective")
    }

    /// True when the consensus stage and every layer stage converged.
    pub fn fully_converged(&self) -> bool {
        self.converged && self.layers.iter().all(|l| l.converged)
    }
}

/// Row-wise argmax of the L1-normalized factor; ties go to the lowest index.
pub fn hard_clustering(h: &DMatrix<f64>) -> Result<HardClusters, SolveError> {
    if h.iter().any(|v| v.is_nan()) {
        return Err(SolveError::NaNInput);
    }
    let k = h.ncols();
    if k == 0 {
        return Err(MatrixError::InvalidShape { n: h.nrows(), k }.into());
    }
    let mut labels = Vec::with_capacity(h.nrows());
    let mut unassigned = Vec::new();
    for (i, row) in h.row_iter().enumerate() {
        let mass: f64 = row.iter().map(|v| v.abs()).sum();
        if mass == 0.0 {
            labels.push(0);
            unassigned.push(i);
            continue;
        }
        let mut best = 0;
        let mut best_value = row[0] / mass;
        for j in 1..k {
            let v = row[j] / mass;
            if v > best_value {
                best = j;
                best_value = v;
            }
        }
        labels.push(best);
    }
    Ok(HardClusters { assignment: ClusterAssignment::new(labels, k)?, unassigned })
}

/// `k − tr(H₁H₁ᵀH₂H₂ᵀ)`; for orthonormal inputs, the sum of squared sines
/// of the principal angles between the column spaces.
pub fn projection_distance_sq(h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> Result<f64, MatrixError> {
    if h1.shape() != h2.shape() {
        return Err(MatrixError::ShapeMismatch { expected: h1.shape(), found: h2.shape() });
    }
    let overlap = h1.transpose() * h2;
    Ok(h1.ncols() as f64 - overlap.norm_squared())
}

/// Sum of per-layer reconstruction errors at the consensus `h` plus `alpha`
/// times its summed projection distance to each layer factor.
pub fn collective_objective(
    network: &MultiplexNetwork,
    per_layer_h: &[FactorMatrix],
    h: &FactorMatrix,
    mixing: Option<&[CentroidMatrix]>,
    alpha: f64,
    method: Method,
) -> Result<f64, SolveError> {
    let layers = network.layers();
    let count = layers.len();
    if per_layer_h.len() != count {
        return Err(MatrixError::LengthMismatch { expected: count, found: per_layer_h.len() }.into());
    }
    let n = network.n();
    for f in per_layer_h.iter().chain(std::iter::once(h)) {
        if f.n() != n || f.k() != h.k() {
            return Err(MatrixError::ShapeMismatch { expected: (n, h.k()), found: (f.n(), f.k()) }.into());
        }
    }
    let mixing: Option<Vec<DMatrix<f64>>> = match (method.is_tri(), mixing) {
        (true, None) => return Err(SolveError::MissingCentroid),
        (true, Some(list)) => {
            if list.len() != count {
                return Err(MatrixError::LengthMismatch { expected: count, found: list.len() }.into());
            }
            if let Some(s) = list.iter().find(|s| s.k() != h.k()) {
                return Err(MatrixError::ShapeMismatch { expected: (h.k(), h.k()), found: (s.k(), s.k()) }.into());
            }
            Some(list.iter().map(|s| s.values().clone()).collect())
        }
        (false, _) => None,
    };
    let targets: Vec<&DMatrix<f64>> = layers.iter().map(LayerMatrix::values).collect();
    let factors: Vec<DMatrix<f64>> = per_layer_h.iter().map(|f| f.values().clone()).collect();
    Ok(collective_value(&targets, &factors, h.values(), mixing.as_deref(), alpha, method))
}

fn collective_value(
    layers: &[&DMatrix<f64>],
    per_layer_h: &[DMatrix<f64>],
    h: &DMatrix<f64>,
    mixing: Option<&[DMatrix<f64>]>,
    alpha: f64,
    method: Method,
) -> f64 {
    let k = h.ncols() as f64;
    let mut total = 0.0;
    for (i, (a, hi)) in layers.iter().zip(per_layer_h).enumerate() {
        let s = mixing.map(|m| &m[i]);
        total += residual(a, h, s, method);
        total += alpha * (k - (h.transpose() * hi).norm_squared());
    }
    total
}

/// Orthonormal basis of the column space of `h`.
fn orthonormal_basis(h: &DMatrix<f64>) -> DMatrix<f64> {
    h.clone().qr().q()
}

/// Collective objective with the consensus term taken between column spaces;
/// `bases` holds orthonormal bases of the layer factors.
fn subspace_value(
    layers: &[&DMatrix<f64>],
    bases: &[DMatrix<f64>],
    h: &DMatrix<f64>,
    mixing: Option<&[DMatrix<f64>]>,
    alpha: f64,
    method: Method,
) -> f64 {
    let k = h.ncols() as f64;
    let q = orthonormal_basis(h);
    let mut total = 0.0;
    for (i, (a, qi)) in layers.iter().zip(bases).enumerate() {
        let s = mixing.map(|m| &m[i]);
        total += residual(a, h, s, method);
        total += alpha * (k - (q.transpose() * qi).norm_squared());
    }
    total
}

/// The single symmetric matrix whose factorization yields the consensus on
/// the symmetric and projective paths: `Σ (Aᵢ + α/2 HᵢHᵢᵀ)` and
/// `Σ (AᵢAᵢᵀ + α HᵢHᵢᵀ)` respectively.
pub fn consensus_target(
    network: &MultiplexNetwork,
    per_layer_h: &[FactorMatrix],
    alpha: f64,
    method: Method,
) -> Result<LayerMatrix, SolveError> {
    let n = network.n();
    if per_layer_h.len() != network.layers().len() {
        return Err(MatrixError::LengthMismatch { expected: network.layers().len(), found: per_layer_h.len() }.into());
    }
    let mut sum = DMatrix::zeros(n, n);
    for (a, hi) in network.layers().iter().zip(per_layer_h) {
        if hi.n() != n {
            return Err(MatrixError::ShapeMismatch { expected: (n, hi.k()), found: (hi.n(), hi.k()) }.into());
        }
        let a = a.values();
        let hv = hi.values();
        let gram = hv * hv.transpose();
        match method {
            Method::Snmf => sum += a + gram * (alpha / 2.0),
            Method::Pnmf => sum += a * a.transpose() + gram * alpha,
            Method::Snmtf | Method::Ssnmtf => {
                return Err(MatrixError::InvalidConfig("tri-factorizations have no single fused target").into())
            }
        }
    }
    Ok(LayerMatrix::new(sum)?)
}

/// Consensus for the symmetric path.
pub fn fuse_csnmf(
    network: &MultiplexNetwork,
    layers: &[FactorizeResult],
    cfg: &SolverConfig,
) -> Result<FusionResult, SolveError> {
    fuse_symmetric(network, layers, cfg, Method::Snmf)
}

/// Consensus for the projective path.
pub fn fuse_cpnmf(
    network: &MultiplexNetwork,
    layers: &[FactorizeResult],
    cfg: &SolverConfig,
) -> Result<FusionResult, SolveError> {
    fuse_symmetric(network, layers, cfg, Method::Pnmf)
}

fn fuse_symmetric(
    network: &MultiplexNetwork,
    layers: &[FactorizeResult],
    cfg: &SolverConfig,
    method: Method,
) -> Result<FusionResult, SolveError> {
    cfg.validate()?;
    let (n, k) = check_stage_one(network, layers, cfg)?;
    let per_layer_h: Vec<FactorMatrix> = layers.iter().map(|l| l.h.clone()).collect();
    let target = consensus_target(network, &per_layer_h, cfg.alpha, method)?;
    let target = target.values();
    let targets: Vec<&DMatrix<f64>> = network.layers().iter().map(LayerMatrix::values).collect();
    let factors: Vec<DMatrix<f64>> = per_layer_h.into_iter().map(FactorMatrix::into_inner).collect();
    let eps = cfg.epsilon;
    let mut rng = seeded_rng(cfg.seed);
    let h0 = draw_factor(&mut rng, n, k);
    let bases: Vec<DMatrix<f64>> = factors.iter().map(orthonormal_basis).collect();
    // The symmetric collective objective equals the fused-target residual up
    // to a constant, so it is tracked as is.
    let merit = |h: &DMatrix<f64>| match method {
        Method::Snmf => collective_value(&targets, &factors, h, None, cfg.alpha, method),
        _ => subspace_value(&targets, &bases, h, None, cfg.alpha, method),
    };
    let out = descend(
        h0,
        &schedule(cfg, method),
        |h, eta| Ok(symmetric_step(h, target, eps, eta)),
        merit,
        |h| rescue_columns(&mut rng, h, eps),
    )?;
    finish(out, layers.to_vec(), None)
}

/// Consensus for the tri-factorization paths. `sign_mode` selects the
/// non-negative or the mixed-sign variant.
pub fn fuse_csnmtf(
    network: &MultiplexNetwork,
    layers: &[FactorizeResult],
    cfg: &SolverConfig,
    sign_mode: SignMode,
) -> Result<FusionResult, SolveError> {
    cfg.validate()?;
    let (n, k) = check_stage_one(network, layers, cfg)?;
    let method = match sign_mode {
        SignMode::Nonnegative => Method::Snmtf,
        SignMode::Mixed => Method::Ssnmtf,
    };
    for layer in layers {
        let s = layer.s.as_ref().ok_or(SolveError::MissingCentroid)?;
        if s.sign_mode() != sign_mode {
            return Err(SolveError::SignModeMismatch);
        }
    }
    let aligned = align_columns(layers);
    let targets: Vec<&DMatrix<f64>> = network.layers().iter().map(LayerMatrix::values).collect();
    let factors: Vec<DMatrix<f64>> = aligned.iter().map(|l| l.h.values().clone()).collect();
    let bases: Vec<DMatrix<f64>> = factors.iter().map(orthonormal_basis).collect();
    let eps = cfg.epsilon;
    let alpha = cfg.alpha;
    let reestimate = cfg.mixing == MixingUpdate::Reestimate;

    let mut rng = seeded_rng(cfg.seed);
    let h0 = match cfg.consensus_init.unwrap_or_else(|| default_consensus_init(method)) {
        ConsensusInit::Random => draw_factor(&mut rng, n, k),
        ConsensusInit::LayerAverage => {
            let mut mean = factors.iter().fold(DMatrix::zeros(n, k), |acc, h| acc + h) / factors.len() as f64;
            for mut col in mean.column_iter_mut() {
                let norm = col.norm();
                if norm > 0.0 {
                    col /= norm;
                }
            }
            mean
        }
    };
    let s0: Vec<DMatrix<f64>> = if reestimate {
        targets
            .iter()
            .map(|a| initial_mixing(&h0, a))
            .collect()
    } else {
        aligned.iter().map(|l| l.s.as_ref().expect("checked above").values().clone()).collect()
    };

    let step = |(h, mixing): &(DMatrix<f64>, Vec<DMatrix<f64>>), eta: f64| {
        let pull = factors.iter().fold(DMatrix::zeros(n, k), |acc, hi| acc + hi * (hi.transpose() * h)) * (alpha / 2.0);
        let ht = h.transpose();
        let h2 = match method {
            Method::Snmtf => {
                let mut num = pull;
                for (a, s) in targets.iter().zip(mixing) {
                    num += *a * h * s;
                }
                let den = h * (&ht * &num);
                ratio_update(h, &num, &den, eps, eta)
            }
            _ => {
                let mut pos = DMatrix::zeros(n, k);
                let mut neg = DMatrix::zeros(n, k);
                for (a, s) in targets.iter().zip(mixing) {
                    let (p, q) = pos_neg_split(&(*a * h * s));
                    pos += p;
                    neg += q;
                }
                let num = &pos + h * (&ht * &neg) + &pull;
                let den = &neg + h * (&ht * (pos + pull));
                ratio_update(h, &num, &den, eps, eta)
            }
        };
        let mixing2 = if reestimate {
            targets
                .iter()
                .zip(mixing)
                .map(|(a, s)| match method {
                    Method::Snmtf => Ok(tri_mixing_step(&h2, s, a, eps)),
                    _ => closed_form_mixing(&h2, a),
                })
                .collect::<Result<Vec<_>, SolveError>>()?
        } else {
            mixing.clone()
        };
        Ok((h2, mixing2))
    };
    let out = descend(
        (h0, s0),
        &schedule(cfg, method),
        step,
        |(h, mixing)| subspace_value(&targets, &bases, h, Some(mixing), alpha, method),
        |(h, _)| rescue_columns(&mut rng, h, eps),
    )?;
    let Descent { state: (h, mixing), trace, iterations, converged } = out;
    let mixing = mixing.into_iter().map(|s| CentroidMatrix::from_solver(s, sign_mode)).collect();
    finish(Descent { state: h, trace, iterations, converged }, aligned, Some(mixing))
}

fn default_consensus_init(method: Method) -> ConsensusInit {
    match method {
        Method::Ssnmtf => ConsensusInit::LayerAverage,
        _ => ConsensusInit::Random,
    }
}

/// Factorizes every layer (in parallel, seeds `cfg.seed + layer index`) and
/// fuses the results into one consensus factor.
pub fn nf_cce(network: &MultiplexNetwork, method: Method, cfg: &SolverConfig) -> Result<FusionResult, SolveError> {
    cfg.validate()?;
    let n = network.n();
    if cfg.k > n {
        return Err(MatrixError::InvalidShape { n, k: cfg.k }.into());
    }
    let layers = network
        .layers()
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let layer_cfg = cfg.clone().with_seed(cfg.seed.wrapping_add(i as u64));
            factorize(a, method, &layer_cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    match method {
        Method::Snmf => fuse_csnmf(network, &layers, cfg),
        Method::Pnmf => fuse_cpnmf(network, &layers, cfg),
        Method::Snmtf => fuse_csnmtf(network, &layers, cfg, SignMode::Nonnegative),
        Method::Ssnmtf => fuse_csnmtf(network, &layers, cfg, SignMode::Mixed),
    }
}

/// Averages the layers into one graph and factorizes that.
pub fn merged_baseline(network: &MultiplexNetwork, method: Method, cfg: &SolverConfig) -> Result<FusionResult, SolveError> {
    let layers = network.layers();
    let n = network.n();
    let sum = layers.iter().fold(DMatrix::zeros(n, n), |acc, a| acc + a.values());
    let merged = LayerMatrix::new(sum / layers.len() as f64)?;
    let out = factorize(&merged, method, cfg)?;
    let FactorizeResult { h, s, objective_trace, iterations, converged } = out;
    let descent = Descent { state: h.into_inner(), trace: objective_trace, iterations, converged };
    finish(descent, Vec::new(), s.map(|s| vec![s]))
}

fn finish(
    out: Descent<DMatrix<f64>>,
    layers: Vec<FactorizeResult>,
    mixing: Option<Vec<CentroidMatrix>>,
) -> Result<FusionResult, SolveError> {
    let clusters = hard_clustering(&out.state)?;
    Ok(FusionResult {
        orthonormality_residual: orthonormality_residual(&out.state),
        h: FactorMatrix::from_solver(out.state),
        layers,
        mixing,
        assignment: clusters.assignment,
        unassigned: clusters.unassigned,
        objective_trace: out.trace,
        iterations: out.iterations,
        converged: out.converged,
    })
}

fn check_stage_one(
    network: &MultiplexNetwork,
    layers: &[FactorizeResult],
    cfg: &SolverConfig,
) -> Result<(usize, usize), SolveError> {
    let n = network.n();
    if layers.len() != network.layers().len() {
        return Err(MatrixError::LengthMismatch { expected: network.layers().len(), found: layers.len() }.into());
    }
    if cfg.k > n {
        return Err(MatrixError::InvalidShape { n, k: cfg.k }.into());
    }
    for l in layers {
        if l.h.n() != n || l.h.k() != cfg.k {
            return Err(MatrixError::ShapeMismatch { expected: (n, cfg.k), found: (l.h.n(), l.h.k()) }.into());
        }
    }
    Ok((n, cfg.k))
}

/// Permutes the columns (and mixing rows/columns) of every layer to best
/// match layer 0 by total column cosine. Layer objectives are unchanged.
pub fn align_columns(layers: &[FactorizeResult]) -> Vec<FactorizeResult> {
    let Some(reference) = layers.first() else {
        return Vec::new();
    };
    let unit = |h: &DMatrix<f64>| {
        let mut u = h.clone();
        for mut col in u.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        u
    };
    let base = unit(reference.h.values());
    let k = base.ncols();
    let mut out = vec![reference.clone()];
    for layer in &layers[1..] {
        let cosines = base.transpose() * unit(layer.h.values());
        let weights = Matrix::from_fn(k, k, |(i, j)| (cosines[(i, j)] * MATCH_SCALE).round() as i64);
        let (_, order) = kuhn_munkres(&weights);
        let h = DMatrix::from_fn(layer.h.n(), k, |r, c| layer.h.values()[(r, order[c])]);
        let s = layer.s.as_ref().map(|s| {
            let permuted = DMatrix::from_fn(k, k, |r, c| s.values()[(order[r], order[c])]);
            CentroidMatrix::from_solver(permuted, s.sign_mode())
        });
        out.push(FactorizeResult { h: FactorMatrix::from_solver(h), s, ..layer.clone() });
    }
    out
}
