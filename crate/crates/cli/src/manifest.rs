//! Run manifests: everything needed to repeat a run bit for bit.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::method::MethodTag;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunManifest {
    Generate(GenerateSpec),
    Cluster(ClusterSpec),
    Evaluate(EvaluateSpec),
    Sweep(SweepSpec),
}

impl RunManifest {
    pub fn command(&self) -> &'static str {
        match self {
            RunManifest::Generate(_) => "generate",
            RunManifest::Cluster(_) => "cluster",
            RunManifest::Evaluate(_) => "evaluate",
            RunManifest::Sweep(_) => "sweep",
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Manifest { path: path.into(), source })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|source| CliError::Manifest { path: path.into(), source })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

/// Synthetic network families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    SynthC { p_var: f64 },
    SynthN { p_noise: f64 },
    Planted { sizes: Vec<usize>, within: f64, between: f64, layers: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSpec {
    #[serde(flatten)]
    pub family: Family,
    pub seed: u64,
    pub out: PathBuf,
}

/// Solver settings shared by `cluster` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub k: usize,
    pub alpha: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub epsilon: f64,
    pub freeze_mixing: bool,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub method: MethodTag,
    pub seed: u64,
    #[serde(flatten)]
    pub solver: SolverSettings,
    pub layers: Vec<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Reference {
    Truth { truth: PathBuf },
    Annotations { annotations: PathBuf, max_term_nodes: usize, min_term_nodes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateSpec {
    pub assignment: PathBuf,
    #[serde(flatten)]
    pub reference: Reference,
    pub out: Option<PathBuf>,
}

/// Families a sweep can range over, keyed by their varying probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepFamily {
    SynthC,
    SynthN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: SweepFamily,
    pub grid: Vec<f64>,
    pub methods: Vec<MethodTag>,
    pub seeds: Vec<u64>,
    #[serde(flatten)]
    pub solver: SolverSettings,
    pub out: PathBuf,
}
