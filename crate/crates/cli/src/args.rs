use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ldl", version, about = "Low-density-limit scattering, master equations and verification runs")]
pub struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where to write the run manifest (defaults next to the primary output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a model file or export a bundled one.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Per-bin T-matrix conditioning and S-matrix unitarity.
    Smatrix(SmatrixArgs),
    /// Integrate the master equation.
    Evolve(EvolveArgs),
    /// Collision-model trajectories and their ensemble average.
    Trajectories(TrajectoryArgs),
    /// Finite-fugacity correlators against their low-density limit.
    Correlators(CorrelatorArgs),
    /// Truncated Fock-space checks of the number-process identities.
    FockVerify(FockArgs),
    /// Every check on one model, with a PASS/FAIL line each.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Parse and validate a model, then build its S-matrix.
    Check(CheckArgs),
    /// Write a bundled model as TOML.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    TwoLevel,
    Null,
    RankDeficient,
}

#[derive(Debug, Args)]
#[group(id = "source", multiple = false)]
pub struct ModelSource {
    /// Model file (TOML, see docs/model-format.md).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// A bundled model instead of a file.
    #[arg(long, value_enum)]
    pub demo: Option<DemoName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rho0Preset {
    /// Lowest level.
    Ground,
    /// Highest level.
    Top,
    /// `1/d`.
    Mixed,
    /// Equal-weight superposition of all levels.
    Superposition,
}

#[derive(Debug, Args)]
#[group(id = "initial", multiple = false)]
pub struct StateSource {
    /// Initial density matrix file (TOML `rho = [[re, im], ...]`, row-major).
    #[arg(long)]
    pub rho0: Option<PathBuf>,
    /// Named initial state, used when no file is given.
    #[arg(long, value_enum, default_value = "superposition")]
    pub rho0_preset: Rho0Preset,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Optional JSON report.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, value_enum)]
    pub name: DemoName,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SmatrixArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// CSV with columns bin, E, cond_T0, cond_T1, unit_defect.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Largest accepted unitarity defect.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub state: StateSource,
    /// Final time.
    #[arg(long)]
    pub t: f64,
    /// RK4 step, used above 8 levels.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Number of equally spaced output times after `t = 0`.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub state: StateSource,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n_traj: usize,
    /// Master seed; trajectory `k` uses `seed ^ k`.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Report states with the free evolution `e^{−iH_S t}` restored.
    #[arg(long)]
    pub schroedinger_picture: bool,
    /// CSV with t, mean entries and standard errors.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON metadata: rate, kernel diagnostics, generator-identity defect.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelatorArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Factors as `fg` channel pairs, latest time first, e.g. `01,10,11`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub channels: Vec<String>,
    /// Time slot of each factor (a permutation of 0..n); time order by default.
    #[arg(long, value_delimiter = ',')]
    pub slots: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Strictly decreasing fugacities in (0, 1).
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-1, 1e-2, 1e-3])]
    pub xi: Vec<f64>,
    /// Line width in units of the bin width.
    #[arg(long, default_value_t = ldl_core::wick::DEFAULT_ETA)]
    pub eta: f64,
    /// Also check factorization against an outer `fg` pair on this bin.
    #[arg(long)]
    pub factorize_bin: Option<usize>,
    #[arg(long, default_value = "01")]
    pub outer: String,
    /// JSON report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FockArgs {
    /// JSON report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Defaults to the bundled two-level model.
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub n_traj: usize,
    /// Directory for report.json and manifest.json.
    #[arg(long, default_value = "ldl-verify")]
    pub out_dir: PathBuf,
}
