use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "adhoc-sinr", version, about = "SINR ad hoc network simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a topology file.
    Gen(GenArgs),
    /// Run one trial per seed and print the summaries.
    Run(RunArgs),
    /// Check a stored coloring against both coloring verifiers.
    Verify(VerifyArgs),
    /// Run the probability and reception fact suites.
    Facts(FactsArgs),
    /// Grid-search a tuned constant profile.
    Calibrate(CalibrateArgs),
    /// Fan trials out over seeds (and sizes) and summarize them.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Theory,
    Tuned,
    File,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SinrArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Growth dimension of the metric (defaults to the topology's space).
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProfileArgs {
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Profile file for `--profile file`.
    #[arg(long)]
    pub profile_path: Option<PathBuf>,
}

/// Everything needed to assemble an experiment; flags override `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub family: Option<String>,
    /// Family scale: square side or line/grid spacing.
    #[arg(long)]
    pub param: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the topology generator.
    #[arg(long)]
    pub topology_seed: Option<u64>,
    /// Topology file instead of a generator.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[command(flatten)]
    pub sinr: SinrArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long)]
    pub budget_mult: Option<f64>,
    /// Explicit round cap.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Source station for broadcasts and wake-ups.
    #[arg(long)]
    pub source: Option<usize>,
    /// Value bound for consensus.
    #[arg(long)]
    pub x: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub param: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Output file; defaults to `<family>-n<n>-seed<seed>.topo` in `--out-dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Trial seed; defaults to the config's seed list.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long)]
    pub coloring: PathBuf,
    #[command(flatten)]
    pub sinr: SinrArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Debug, Args)]
pub struct FactsArgs {
    /// Random vectors per probability fact.
    #[arg(long, default_value_t = 100_000)]
    pub vectors: u64,
    /// Random instances per reception fact.
    #[arg(long, default_value_t = 10_000)]
    pub instances: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 2024)]
    pub master_seed: u64,
    /// Stations per unit area of the uniform-square family.
    #[arg(long, default_value_t = 12.0)]
    pub density: f64,
    /// Also calibrate on unit lines reaching this many successors.
    #[arg(long)]
    pub line_hops: Vec<usize>,
    #[command(flatten)]
    pub sinr: SinrArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Seeds `first_seed .. first_seed + trials`.
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Sizes to sweep; defaults to the configured `n`.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Draw a fresh topology per trial (random families only).
    #[arg(long)]
    pub vary_topology: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
}
