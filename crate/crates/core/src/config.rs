//! Solver configuration.

use crate::error::MatrixError;
use crate::matrix::DEFAULT_EPSILON;

/// How far each multiplicative update moves along its ratio.
///
/// An update multiplies every entry by `ratio^step`. `Fixed(1.0)` is the
/// plain rule. `Backtracking` tries `1, 1/2, 1/4, ..., 2^-10` and keeps the
/// first step that does not increase the tracked objective, falling back to
/// the best candidate when none qualifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    Backtracking,
}

/// Whether the per-layer mixing matrices of the tri-factorization paths are
/// refit against the consensus factor or kept from the per-layer stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixingUpdate {
    Frozen,
    #[default]
    Reestimate,
}

/// Starting point of the consensus factor on the tri-factorization paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsensusInit {
    /// Mean of the column-aligned per-layer factors, columns renormalized.
    LayerAverage,
    /// Fresh seeded draw, as for a single-layer run.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub k: usize,
    /// Weight of the subspace-agreement term.
    pub alpha: f64,
    pub max_iters: usize,
    /// Stop once the relative objective change drops below this.
    pub rel_tol: f64,
    pub seed: u64,
    /// Floor added to every update denominator.
    pub epsilon: f64,
    /// Step policy; `None` picks the method default.
    pub step: Option<StepRule>,
    pub mixing: MixingUpdate,
    /// Consensus start for tri-factorizations; `None` picks the method default.
    pub consensus_init: Option<ConsensusInit>,
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            alpha: 0.5,
            max_iters: 500,
            rel_tol: 1e-6,
            seed: 0,
            epsilon: DEFAULT_EPSILON,
            step: None,
            mixing: MixingUpdate::default(),
            consensus_init: None,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_step(mut self, step: StepRule) -> Self {
        self.step = Some(step);
        self
    }

    pub fn validate(&self) -> Result<(), MatrixError> {
        if self.k == 0 {
            return Err(MatrixError::InvalidConfig("k must be positive"));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(MatrixError::InvalidConfig("alpha must be finite and >= 0"));
        }
        if self.max_iters == 0 {
            return Err(MatrixError::InvalidConfig("max_iters must be >= 1"));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(MatrixError::InvalidConfig("rel_tol must be > 0"));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(MatrixError::InvalidConfig("epsilon must be finite and > 0"));
        }
        if let Some(StepRule::Fixed(step)) = self.step {
            if !(step > 0.0 && step <= 1.0) {
                return Err(MatrixError::InvalidConfig("fixed step must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SolverConfig::new(3);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.max_iters, 500);
        assert_eq!(cfg.rel_tol, 1e-6);
        assert_eq!(cfg.epsilon, 1e-12);
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(SolverConfig::new(0).validate().is_err());
        assert!(SolverConfig::new(2).with_alpha(-1.0).validate().is_err());
        assert!(SolverConfig::new(2).with_alpha(f64::NAN).validate().is_err());
        assert!(SolverConfig::new(2).with_max_iters(0).validate().is_err());
        assert!(SolverConfig::new(2).with_rel_tol(0.0).validate().is_err());
        assert!(SolverConfig::new(2).with_epsilon(0.0).validate().is_err());
        assert!(SolverConfig::new(2)
            .with_step(StepRule::Fixed(1.5))
            .validate()
            .is_err());
    }
}
