//! Community detection in multiplex networks by collective non-negative
//! matrix factorization.
//!
//! Each layer is factorized on its own, then a consensus factor is fitted
//! that reconstructs every layer while staying close to the per-layer
//! subspaces. Hard communities come from the row-wise argmax of the
//! consensus factor.
//!
//! ```
//! use multiplex_nmf::{nf_cce, generate_synth_n, nmi, Method, SolverConfig};
//!
//! let network = generate_synth_n(0.02, 1).unwrap();
//! let cfg = SolverConfig::new(2).with_seed(1);
//! let fit = nf_cce(&network, Method::Snmf, &cfg).unwrap();
//! let truth = network.ground_truth().unwrap();
//! assert!(nmi(fit.assignment.labels(), truth.labels()).unwrap() > 0.95);
//! ```

pub mod config;
mod descent;
pub mod error;
pub mod eval;
pub mod factorize;
pub mod fuse;
pub mod matrix;
pub mod synth;

pub use config::{ConsensusInit, MixingUpdate, SolverConfig, StepRule};
pub use error::{MatrixError, SolveError};
pub use eval::{
    adjusted_rand_index, average_redundancy, nmi, purity, rand_index, redundancy, AnnotationSet, EvalError,
};
pub use factorize::{
    factorize, objective, update_pnmf, update_snmf, update_snmtf, update_ssnmtf, FactorizeResult, Method,
};
pub use fuse::{
    align_columns, collective_objective, consensus_target, fuse_cpnmf, fuse_csnmf, fuse_csnmtf, hard_clustering,
    merged_baseline, nf_cce, projection_distance_sq, FusionResult, HardClusters,
};
pub use matrix::{
    init_factor, natural_gradient, orthonormality_residual, pos_neg_split, CentroidMatrix, ClusterAssignment,
    FactorMatrix, LayerMatrix, MultiplexNetwork, SignMode,
};
pub use synth::{
    generate_layer, generate_network, generate_synth_c, generate_synth_n, synth_c_grid, synth_n_grid, PlantedSpec,
    SynthError,
};
