use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multiplex_nmf::matrix::DEFAULT_EPSILON;
use multiplex_nmf::{synth_c_grid, synth_n_grid};
use multiplex_nmf_cli::commands::{self, epsilon_from_env};
use multiplex_nmf_cli::error::EXIT_OK;
use multiplex_nmf_cli::manifest::{
    ClusterSpec, EvaluateSpec, Family, GenerateSpec, Reference, SolverSettings, SweepFamily, SweepSpec,
};
use multiplex_nmf_cli::{CliError, MethodTag, RunManifest};

/// Community detection in multiplex networks by collective non-negative
/// matrix factorization.
#[derive(Debug, Parser)]
#[command(name = "multiplex-nmf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic multiplex network with its planted labels.
    Generate(GenerateArgs),
    /// Cluster the nodes of one or more layer files.
    Cluster(ClusterArgs),
    /// Score an assignment against labels or term annotations.
    Evaluate(EvaluateArgs),
    /// Run methods over a grid of synthetic networks and seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    SynthC,
    SynthN,
    Planted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepFamilyArg {
    SynthC,
    SynthN,
}

/// Replays a previous run; only the output directory may be changed.
#[derive(Debug, Args)]
struct Replay {
    /// Manifest written by an earlier run.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    family: Option<FamilyArg>,
    /// Density of the varying block (synth-c).
    #[arg(long)]
    p_var: Option<f64>,
    /// Between-block density of the first layer (synth-n).
    #[arg(long)]
    p_noise: Option<f64>,
    /// Community sizes (planted), comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Within-community edge probability (planted).
    #[arg(long)]
    within: Option<f64>,
    /// Between-community edge probability (planted).
    #[arg(long)]
    between: Option<f64>,
    /// Number of layers (planted).
    #[arg(long, default_value_t = 1)]
    layer_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    replay: Replay,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Number of communities.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Weight of the consensus term.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Stop when the relative objective change falls below this.
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    /// Keep the layer mixing matrices fixed during the consensus stage.
    #[arg(long)]
    freeze_mixing: bool,
    /// Exit with status 4 when a solver run does not converge.
    #[arg(long)]
    strict: bool,
}

impl SolverArgs {
    fn settings(&self, epsilon: f64) -> SolverSettings {
        SolverSettings {
            k: self.k,
            alpha: self.alpha,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            epsilon,
            freeze_mixing: self.freeze_mixing,
            strict: self.strict,
        }
    }
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Layer edge lists (`src dst weight`).
    #[arg(long, num_args = 1..)]
    layers: Vec<PathBuf>,
    /// snmf, pnmf, snmtf, ssnmtf, csnmf, cpnmf, csnmtf, cssnmtf or merged-<base>.
    #[arg(long)]
    method: Option<MethodTag>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Worker threads for the per-layer stage.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    replay: Replay,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Assignment file (`node cluster`).
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Reference labels (`node label`).
    #[arg(long, conflicts_with = "annotations")]
    truth: Option<PathBuf>,
    /// Term annotations (`node term`), scored by average redundancy.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Drop terms carried by more nodes than this.
    #[arg(long, default_value_t = multiplex_nmf::eval::DEFAULT_MAX_TERM_NODES)]
    max_term_nodes: usize,
    /// Drop terms carried by this many nodes or fewer.
    #[arg(long, default_value_t = multiplex_nmf::eval::DEFAULT_MIN_TERM_NODES)]
    min_term_nodes: usize,
    #[command(flatten)]
    replay: Replay,
}

#[derive(Debug, Args)]
struct SweepArgs {
    family: Option<SweepFamilyArg>,
    /// Grid of the varying probability; defaults to the family's grid.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "csnmf,merged-snmf")]
    methods: Vec<MethodTag>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Grid points solved in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    replay: Replay,
}

fn missing(what: &str) -> CliError {
    CliError::InvalidArgument(format!("missing {what}"))
}

fn required<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| missing(what))
}

fn replayed(replay: &Replay, command: &str) -> Result<Option<RunManifest>, CliError> {
    let Some(path) = &replay.manifest else { return Ok(None) };
    let manifest = RunManifest::load(path)?;
    if manifest.command() != command {
        return Err(CliError::InvalidArgument(format!(
            "{} records a `{}` run, not `{command}`",
            path.display(),
            manifest.command()
        )));
    }
    Ok(Some(manifest))
}

fn epsilon(recorded: f64) -> Result<f64, CliError> {
    Ok(epsilon_from_env()?.unwrap_or(recorded))
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let spec = match replayed(&args.replay, "generate")? {
        Some(RunManifest::Generate(mut spec)) => {
            spec.out = args.replay.out.unwrap_or(spec.out);
            spec
        }
        _ => {
            let family = match required(args.family, "network family")? {
                FamilyArg::SynthC => Family::SynthC { p_var: required(args.p_var, "--p-var")? },
                FamilyArg::SynthN => Family::SynthN { p_noise: required(args.p_noise, "--p-noise")? },
                FamilyArg::Planted => {
                    if args.sizes.is_empty() {
                        return Err(missing("--sizes"));
                    }
                    Family::Planted {
                        sizes: args.sizes,
                        within: required(args.within, "--within")?,
                        between: required(args.between, "--between")?,
                        layers: args.layer_count,
                    }
                }
            };
            GenerateSpec { family, seed: args.seed, out: required(args.replay.out, "--out")? }
        }
    };
    for path in commands::generate(&spec)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn with_jobs<T: Send>(jobs: Option<usize>, run: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(run()),
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| CliError::InvalidArgument(format!("cannot start {jobs} jobs: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

fn cluster(args: ClusterArgs) -> Result<(), CliError> {
    let spec = match replayed(&args.replay, "cluster")? {
        Some(RunManifest::Cluster(mut spec)) => {
            spec.out = args.replay.out.unwrap_or(spec.out);
            spec.solver.epsilon = epsilon(spec.solver.epsilon)?;
            spec
        }
        _ => ClusterSpec {
            method: required(args.method, "--method")?,
            seed: args.seed,
            solver: args.solver.settings(epsilon(DEFAULT_EPSILON)?),
            layers: args.layers,
            out: required(args.replay.out, "--out")?,
        },
    };
    let report = with_jobs(args.jobs, || commands::cluster(&spec))??;
    println!(
        "{}: {} iterations, converged {}, wrote {}",
        spec.method,
        report.run.iterations,
        report.run.converged,
        report.out.display()
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let spec = match replayed(&args.replay, "evaluate")? {
        Some(RunManifest::Evaluate(mut spec)) => {
            spec.out = args.replay.out.or(spec.out);
            spec
        }
        _ => {
            let reference = match (args.truth, args.annotations) {
                (Some(truth), _) => Reference::Truth { truth },
                (None, Some(annotations)) => Reference::Annotations {
                    annotations,
                    max_term_nodes: args.max_term_nodes,
                    min_term_nodes: args.min_term_nodes,
                },
                (None, None) => return Err(missing("--truth or --annotations")),
            };
            EvaluateSpec { assignment: required(args.assignment, "--assignment")?, reference, out: args.replay.out }
        }
    };
    print!("{}", commands::evaluate(&spec)?.to_csv());
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let spec = match replayed(&args.replay, "sweep")? {
        Some(RunManifest::Sweep(mut spec)) => {
            spec.out = args.replay.out.unwrap_or(spec.out);
            spec.solver.epsilon = epsilon(spec.solver.epsilon)?;
            spec
        }
        _ => {
            let family = match required(args.family, "network family")? {
                SweepFamilyArg::SynthC => SweepFamily::SynthC,
                SweepFamilyArg::SynthN => SweepFamily::SynthN,
            };
            let grid = match (args.grid.is_empty(), family) {
                (false, _) => args.grid,
                (true, SweepFamily::SynthC) => synth_c_grid(),
                (true, SweepFamily::SynthN) => synth_n_grid(),
            };
            SweepSpec {
                family,
                grid,
                methods: args.methods,
                seeds: args.seeds,
                solver: args.solver.settings(epsilon(DEFAULT_EPSILON)?),
                out: required(args.replay.out, "--out")?,
            }
        }
    };
    let report = commands::sweep(&spec, args.jobs)?;
    println!("param,method,seeds,mean_purity,mean_nmi,mean_ari");
    for s in &report.summary {
        println!("{},{},{},{},{},{}", s.param, s.method, s.seeds, s.purity, s.nmi, s.ari);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Cluster(args) => cluster(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Sweep(args) => sweep(args),
    };
    match outcome {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
