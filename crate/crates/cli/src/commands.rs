//! The four subcommands, driven by manifests.

use std::path::{Path, PathBuf};

use multiplex_nmf::{
    adjusted_rand_index, average_redundancy, factorize, generate_network, generate_synth_c, generate_synth_n,
    hard_clustering, merged_baseline, nf_cce, nmi, objective, orthonormality_residual, purity, rand_index,
    AnnotationSet, ClusterAssignment, FusionResult, Method, MixingUpdate, MultiplexNetwork, PlantedSpec, SolverConfig,
};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::io::{
    read_annotations, read_assignment, read_labels, read_layers, write_csv, write_factor, write_labels, write_layer,
    ASSIGNMENT_HEADER, TRUTH_HEADER,
};
use crate::manifest::{
    ClusterSpec, EvaluateSpec, Family, GenerateSpec, Reference, RunManifest, SolverSettings, SweepFamily, SweepSpec,
    MANIFEST_FILE,
};
use crate::method::MethodTag;

/// Overrides the denominator floor of every solver run.
pub const EPSILON_VAR: &str = "MULTIPLEX_NMF_EPSILON";

pub const TRUTH_FILE: &str = "truth.tsv";
pub const ASSIGNMENT_FILE: &str = "assignment.tsv";
pub const FACTOR_FILE: &str = "consensus_H.tsv";
pub const TRACE_FILE: &str = "trace.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Value of the epsilon override, if set.
pub fn epsilon_from_env() -> Result<Option<f64>, CliError> {
    match std::env::var(EPSILON_VAR) {
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(eps) if eps.is_finite() && eps > 0.0 => Ok(Some(eps)),
            _ => Err(CliError::InvalidArgument(format!("{EPSILON_VAR}=`{text}` is not a positive number"))),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::InvalidArgument(format!("{EPSILON_VAR}: {e}"))),
    }
}

fn create_dir(path: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
    path.canonicalize().map_err(|e| CliError::io(path, e))
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    path.canonicalize().map_err(|e| CliError::io(path, e))
}

fn node_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

fn family_network(family: &Family, seed: u64) -> Result<MultiplexNetwork, CliError> {
    Ok(match family {
        Family::SynthC { p_var } => generate_synth_c(*p_var, seed)?,
        Family::SynthN { p_noise } => generate_synth_n(*p_noise, seed)?,
        Family::Planted { sizes, within, between, layers } => {
            if *layers == 0 {
                return Err(CliError::InvalidArgument("a planted network needs at least one layer".into()));
            }
            let spec = PlantedSpec::uniform(sizes.clone(), *within, *between, seed)?;
            generate_network(&vec![spec; *layers])?
        }
    })
}

/// Files written by `generate`, in order.
pub fn generate(spec: &GenerateSpec) -> Result<Vec<PathBuf>, CliError> {
    let network = family_network(&spec.family, spec.seed)?;
    let out = create_dir(&spec.out)?;
    let names = node_names(network.n());
    let mut written = Vec::new();
    for (i, layer) in network.layers().iter().enumerate() {
        let path = out.join(format!("layer{}.tsv", i + 1));
        write_layer(&path, layer, &names)?;
        written.push(path);
    }
    if let Some(truth) = network.ground_truth() {
        let path = out.join(TRUTH_FILE);
        write_labels(&path, &TRUTH_HEADER, &names, truth.labels())?;
        written.push(path);
    }
    let path = out.join(MANIFEST_FILE);
    RunManifest::Generate(GenerateSpec { out, ..spec.clone() }).save(&path)?;
    written.push(path);
    Ok(written)
}

fn solver_config(settings: &SolverSettings, seed: u64) -> SolverConfig {
    let mut cfg = SolverConfig::new(settings.k)
        .with_alpha(settings.alpha)
        .with_seed(seed)
        .with_max_iters(settings.max_iters)
        .with_rel_tol(settings.rel_tol)
        .with_epsilon(settings.epsilon);
    if settings.freeze_mixing {
        cfg.mixing = MixingUpdate::Frozen;
    }
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerDiagnostics {
    /// Objective of the layer's own factorization.
    pub objective: f64,
    /// Reconstruction error of the layer at the final factor.
    pub residual_at_consensus: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub orthonormality_residual: f64,
    pub layers: Vec<LayerDiagnostics>,
    /// Nodes with an all-zero factor row; they are reported in cluster 0.
    pub unassigned: Vec<String>,
}

/// Outcome of one clustering run, independent of the method family.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    pub h: DMatrix<f64>,
    pub assignment: ClusterAssignment,
    pub unassigned: Vec<usize>,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub orthonormality_residual: f64,
    pub layers: Vec<LayerDiagnostics>,
}

impl ClusterRun {
    fn from_fusion(network: &MultiplexNetwork, result: FusionResult, method: Method) -> Result<Self, CliError> {
        let converged = result.fully_converged();
        let mut layers = Vec::with_capacity(result.layers.len());
        for (i, (a, stage)) in network.layers().iter().zip(&result.layers).enumerate() {
            let s = result.mixing.as_ref().map(|m| &m[i]);
            layers.push(LayerDiagnostics {
                objective: stage.final_objective(),
                residual_at_consensus: objective(a, &result.h, s, method)?,
                iterations: stage.iterations,
                converged: stage.converged,
            });
        }
        Ok(Self {
            h: result.h.values().clone(),
            assignment: result.assignment,
            unassigned: result.unassigned,
            trace: result.objective_trace,
            iterations: result.iterations,
            converged,
            orthonormality_residual: result.orthonormality_residual,
            layers,
        })
    }
}

/// Runs `tag` on a network.
pub fn run_method(network: &MultiplexNetwork, tag: MethodTag, cfg: &SolverConfig) -> Result<ClusterRun, CliError> {
    match tag {
        MethodTag::Single(method) => {
            if network.layers().len() != 1 {
                return Err(CliError::InvalidArgument(format!(
                    "{tag} factorizes a single layer but {} were given; use c{tag} or merged-{tag}",
                    network.layers().len()
                )));
            }
            let a = &network.layers()[0];
            let result = factorize(a, method, cfg)?;
            let clusters = hard_clustering(result.h.values())?;
            let objective = result.final_objective();
            Ok(ClusterRun {
                orthonormality_residual: orthonormality_residual(result.h.values()),
                h: result.h.into_inner(),
                assignment: clusters.assignment,
                unassigned: clusters.unassigned,
                iterations: result.iterations,
                converged: result.converged,
                layers: vec![LayerDiagnostics {
                    objective,
                    residual_at_consensus: objective,
                    iterations: result.iterations,
                    converged: result.converged,
                }],
                trace: result.objective_trace,
            })
        }
        MethodTag::Collective(method) => ClusterRun::from_fusion(network, nf_cce(network, method, cfg)?, method),
        MethodTag::Merged(method) => ClusterRun::from_fusion(network, merged_baseline(network, method, cfg)?, method),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub out: PathBuf,
    pub run: ClusterRun,
}

pub fn cluster(spec: &ClusterSpec) -> Result<ClusterReport, CliError> {
    if spec.layers.is_empty() {
        return Err(CliError::InvalidArgument("at least one layer file is required".into()));
    }
    let layers = spec.layers.iter().map(|p| absolute(p)).collect::<Result<Vec<_>, _>>()?;
    let (network, index) = read_layers(&layers)?;
    let cfg = solver_config(&spec.solver, spec.seed);
    let run = run_method(&network, spec.method, &cfg)?;
    let out = create_dir(&spec.out)?;
    let names = index.ids();
    write_labels(&out.join(ASSIGNMENT_FILE), &ASSIGNMENT_HEADER, names, run.assignment.labels())?;
    write_factor(&out.join(FACTOR_FILE), names, &run.h)?;
    let rows: Vec<Vec<String>> =
        run.trace.iter().enumerate().map(|(i, v)| vec![i.to_string(), v.to_string()]).collect();
    write_csv(&out.join(TRACE_FILE), &["iteration", "objective"], &rows)?;
    let diagnostics = Diagnostics {
        method: spec.method.to_string(),
        converged: run.converged,
        iterations: run.iterations,
        final_objective: *run.trace.last().expect("trace holds the starting objective"),
        orthonormality_residual: run.orthonormality_residual,
        layers: run.layers.clone(),
        unassigned: run.unassigned.iter().map(|&i| names[i].clone()).collect(),
    };
    let path = out.join(DIAGNOSTICS_FILE);
    let mut text = serde_json::to_string_pretty(&diagnostics).map_err(|source| CliError::Manifest { path: path.clone(), source })?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    RunManifest::Cluster(ClusterSpec { layers, out: out.clone(), ..spec.clone() }).save(&out.join(MANIFEST_FILE))?;
    if spec.solver.strict && !run.converged {
        return Err(CliError::NotConverged { runs: 1 });
    }
    Ok(ClusterReport { out, run })
}

/// Scores of an assignment against a reference.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Truth { purity: f64, nmi: f64, ari: f64, rand_index: f64 },
    Annotations { average_redundancy: f64 },
}

impl Evaluation {
    pub fn header(&self) -> Vec<&'static str> {
        match self {
            Evaluation::Truth { .. } => vec!["purity", "nmi", "ari", "rand_index"],
            Evaluation::Annotations { .. } => vec!["average_redundancy"],
        }
    }

    pub fn values(&self) -> Vec<String> {
        match self {
            Evaluation::Truth { purity, nmi, ari, rand_index } => {
                [purity, nmi, ari, rand_index].iter().map(|v| v.to_string()).collect()
            }
            Evaluation::Annotations { average_redundancy } => vec![average_redundancy.to_string()],
        }
    }

    /// Header and value lines as comma-separated text.
    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", self.header().join(","), self.values().join(","))
    }
}

pub fn evaluate(spec: &EvaluateSpec) -> Result<Evaluation, CliError> {
    let assignment_path = absolute(&spec.assignment)?;
    let (index, clusters, k) = read_assignment(&assignment_path)?;
    if index.is_empty() {
        return Err(CliError::format(&assignment_path, 1, "assignment lists no nodes"));
    }
    let (evaluation, reference) = match &spec.reference {
        Reference::Truth { truth } => {
            let truth = absolute(truth)?;
            let (classes, _) = read_labels(&truth, &TRUTH_HEADER, &index)?;
            let evaluation = Evaluation::Truth {
                purity: purity(&clusters, &classes)?,
                nmi: nmi(&clusters, &classes)?,
                ari: adjusted_rand_index(&clusters, &classes)?,
                rand_index: rand_index(&clusters, &classes)?,
            };
            (evaluation, Reference::Truth { truth })
        }
        Reference::Annotations { annotations, max_term_nodes, min_term_nodes } => {
            let annotations = absolute(annotations)?;
            let (terms, vocabulary) = read_annotations(&annotations, &index)?;
            let set = AnnotationSet::new(terms, vocabulary)?.filter_by_frequency(*max_term_nodes, *min_term_nodes);
            let assignment = ClusterAssignment::new(clusters, k)?;
            let evaluation = Evaluation::Annotations { average_redundancy: average_redundancy(&assignment, &set)? };
            let reference = Reference::Annotations {
                annotations,
                max_term_nodes: *max_term_nodes,
                min_term_nodes: *min_term_nodes,
            };
            (evaluation, reference)
        }
    };
    if let Some(out) = &spec.out {
        let out = create_dir(out)?;
        let path = out.join(EVALUATION_FILE);
        std::fs::write(&path, evaluation.to_csv()).map_err(|e| CliError::io(&path, e))?;
        let manifest = EvaluateSpec { assignment: assignment_path, reference, out: Some(out.clone()) };
        RunManifest::Evaluate(manifest).save(&out.join(MANIFEST_FILE))?;
    }
    Ok(evaluation)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub method: MethodTag,
    pub seed: u64,
    pub purity: f64,
    pub nmi: f64,
    pub ari: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub param: f64,
    pub method: MethodTag,
    pub seeds: usize,
    pub purity: f64,
    pub nmi: f64,
    pub ari: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub out: PathBuf,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

fn sweep_network(family: SweepFamily, param: f64, seed: u64) -> Result<MultiplexNetwork, CliError> {
    Ok(match family {
        SweepFamily::SynthC => generate_synth_c(param, seed)?,
        SweepFamily::SynthN => generate_synth_n(param, seed)?,
    })
}

/// Runs every (grid point, method, seed) combination on `jobs` threads.
pub fn sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepReport, CliError> {
    if spec.grid.is_empty() || spec.methods.is_empty() || spec.seeds.is_empty() {
        return Err(CliError::InvalidArgument("sweep needs a grid, methods and seeds".into()));
    }
    if let Some(tag) = spec.methods.iter().find(|m| matches!(m, MethodTag::Single(_))) {
        return Err(CliError::InvalidArgument(format!(
            "sweep networks have two layers; {tag} is single-layer (use c{tag} or merged-{tag})"
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::InvalidArgument(format!("cannot start {jobs} jobs: {e}")))?;
    let points: Vec<(f64, u64)> =
        spec.grid.iter().flat_map(|&p| spec.seeds.iter().map(move |&s| (p, s))).collect();
    let batches: Vec<Vec<SweepRow>> = pool.install(|| {
        points
            .par_iter()
            .map(|&(param, seed)| {
                let network = sweep_network(spec.family, param, seed)?;
                let truth = network.ground_truth().expect("synthetic networks carry labels").labels().to_vec();
                let cfg = solver_config(&spec.solver, seed);
                spec.methods
                    .iter()
                    .map(|&method| {
                        let run = run_method(&network, method, &cfg)?;
                        let labels = run.assignment.labels();
                        Ok(SweepRow {
                            param,
                            method,
                            seed,
                            purity: purity(labels, &truth)?,
                            nmi: nmi(labels, &truth)?,
                            ari: adjusted_rand_index(labels, &truth)?,
                            converged: run.converged,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut rows: Vec<SweepRow> = batches.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        a.param
            .total_cmp(&b.param)
            .then_with(|| a.method.to_string().cmp(&b.method.to_string()))
            .then_with(|| a.seed.cmp(&b.seed))
    });
    let summary = summarize(&rows);

    let out = create_dir(&spec.out)?;
    let lines: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.param.to_string(),
                r.method.to_string(),
                r.seed.to_string(),
                r.purity.to_string(),
                r.nmi.to_string(),
                r.ari.to_string(),
            ]
        })
        .collect();
    write_csv(&out.join(RESULTS_FILE), &["param", "method", "seed", "purity", "nmi", "ari"], &lines)?;
    let lines: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.param.to_string(),
                s.method.to_string(),
                s.seeds.to_string(),
                s.purity.to_string(),
                s.nmi.to_string(),
                s.ari.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join(SUMMARY_FILE),
        &["param", "method", "seeds", "mean_purity", "mean_nmi", "mean_ari"],
        &lines,
    )?;
    RunManifest::Sweep(SweepSpec { out: out.clone(), ..spec.clone() }).save(&out.join(MANIFEST_FILE))?;
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    if spec.solver.strict && unconverged > 0 {
        return Err(CliError::NotConverged { runs: unconverged });
    }
    Ok(SweepReport { out, rows, summary })
}

/// Means over seeds of consecutive rows sharing a grid point and method.
fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut summary: Vec<SweepSummary> = Vec::new();
    for group in rows.chunk_by(|a, b| a.param == b.param && a.method == b.method) {
        let count = group.len() as f64;
        let mean = |f: fn(&SweepRow) -> f64| group.iter().map(f).sum::<f64>() / count;
        summary.push(SweepSummary {
            param: group[0].param,
            method: group[0].method,
            seeds: group.len(),
            purity: mean(|r| r.purity),
            nmi: mean(|r| r.nmi),
            ari: mean(|r| r.ari),
        });
    }
    summary
}
