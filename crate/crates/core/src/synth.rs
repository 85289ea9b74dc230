//! Planted-partition graphs and the two-layer benchmark families built on
//! them: one where each layer hides a different community, one where noise
//! grows in a single layer.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::MatrixError;
use crate::matrix::{ClusterAssignment, LayerMatrix, MultiplexNetwork};

/// Community size in the two-block benchmark families.
pub const BLOCK_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid planted-partition spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Block sizes and edge probabilities of a planted-partition graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub community_sizes: Vec<usize>,
    /// Edge probability inside each community.
    pub within: Vec<f64>,
    /// Symmetric edge probabilities between communities; the diagonal is
    /// ignored in favour of `within`.
    pub between: Vec<Vec<f64>>,
    pub seed: u64,
}

impl PlantedSpec {
    pub fn new(
        community_sizes: Vec<usize>,
        within: Vec<f64>,
        between: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self, SynthError> {
        let spec = Self { community_sizes, within, between, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Same `within` for every block and same `between` for every pair.
    pub fn uniform(community_sizes: Vec<usize>, within: f64, between: f64, seed: u64) -> Result<Self, SynthError> {
        let c = community_sizes.len();
        Self::new(community_sizes, vec![within; c], vec![vec![between; c]; c], seed)
    }

    /// Two blocks of `size` nodes.
    pub fn two_block(size: usize, p11: f64, p22: f64, p12: f64, seed: u64) -> Result<Self, SynthError> {
        Self::new(vec![size, size], vec![p11, p22], vec![vec![p12, p12], vec![p12, p12]], seed)
    }

    pub fn n(&self) -> usize {
        self.community_sizes.iter().sum()
    }

    /// Block index of every node, blocks laid out consecutively.
    pub fn labels(&self) -> Vec<usize> {
        self.community_sizes
            .iter()
            .enumerate()
            .flat_map(|(block, &size)| std::iter::repeat(block).take(size))
            .collect()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let c = self.community_sizes.len();
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if c == 0 {
            return bad("no communities".into());
        }
        if self.community_sizes.contains(&0) {
            return bad("community sizes must be positive".into());
        }
        if self.within.len() != c {
            return bad(format!("{} within-probabilities for {c} communities", self.within.len()));
        }
        if self.between.len() != c || self.between.iter().any(|row| row.len() != c) {
            return bad(format!("between-probabilities must form a {c}x{c} table"));
        }
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !self.within.iter().copied().all(in_unit) {
            return bad("within-probabilities must lie in [0, 1]".into());
        }
        for i in 0..c {
            for j in 0..c {
                let p = self.between[i][j];
                if i != j && !in_unit(p) {
                    return bad(format!("between-probability ({i}, {j}) = {p} is outside [0, 1]"));
                }
                if i < j && p != self.between[j][i] {
                    return bad(format!("between-probabilities ({i}, {j}) and ({j}, {i}) differ"));
                }
            }
        }
        Ok(())
    }

    fn probability(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.within[a]
        } else {
            self.between[a][b]
        }
    }
}

/// Samples one binary, loop-free, symmetric layer. Pairs are visited row by
/// row over the upper triangle with one draw each.
pub fn generate_layer(spec: &PlantedSpec) -> Result<LayerMatrix, SynthError> {
    sample_layer(spec, 0)
}

fn sample_layer(spec: &PlantedSpec, stream: u64) -> Result<LayerMatrix, SynthError> {
    spec.validate()?;
    let labels = spec.labels();
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let mut a = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            let draw: f64 = rng.gen();
            if draw < spec.probability(labels[u], labels[v]) {
                a[(u, v)] = 1.0;
                a[(v, u)] = 1.0;
            }
        }
    }
    Ok(LayerMatrix::new(a)?)
}

/// Builds a network whose layer `i` samples `specs[i]` on its own random
/// stream; ground truth comes from the first spec.
pub fn generate_network(specs: &[PlantedSpec]) -> Result<MultiplexNetwork, SynthError> {
    let first = specs.first().ok_or_else(|| SynthError::InvalidSpec("no layers".into()))?;
    if specs.iter().any(|s| s.community_sizes != first.community_sizes) {
        return Err(SynthError::InvalidSpec("layers must share one block layout".into()));
    }
    let layers = specs
        .iter()
        .enumerate()
        .map(|(i, s)| sample_layer(s, i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let k = first.community_sizes.len();
    let truth = ClusterAssignment::new(first.labels(), k)?;
    Ok(MultiplexNetwork::new(layers)?.with_ground_truth(truth)?)
}

/// Two layers, two blocks of 100: the first block's density is `p_var` in
/// layer 1 and the second block's in layer 2; the other block sits at 0.2
/// and blocks connect at 0.05.
pub fn generate_synth_c(p_var: f64, seed: u64) -> Result<MultiplexNetwork, SynthError> {
    generate_network(&[
        PlantedSpec::two_block(BLOCK_SIZE, p_var, 0.2, 0.05, seed)?,
        PlantedSpec::two_block(BLOCK_SIZE, 0.2, p_var, 0.05, seed)?,
    ])
}

/// Two layers, two blocks of 100 at density 0.3: blocks connect at
/// `p_noise` in layer 1 and at 0.02 in layer 2.
pub fn generate_synth_n(p_noise: f64, seed: u64) -> Result<MultiplexNetwork, SynthError> {
    generate_network(&[
        PlantedSpec::two_block(BLOCK_SIZE, 0.3, 0.3, p_noise, seed)?,
        PlantedSpec::two_block(BLOCK_SIZE, 0.3, 0.3, 0.02, seed)?,
    ])
}

/// 0.05, 0.075, ..., 0.3
pub fn synth_c_grid() -> Vec<f64> {
    (0..11).map(|i| (50 + 25 * i) as f64 / 1000.0).collect()
}

/// 0.02, 0.04, ..., 0.2
pub fn synth_n_grid() -> Vec<f64> {
    (1..=10).map(|i| (2 * i) as f64 / 100.0).collect()
}
