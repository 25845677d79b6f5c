use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "flola",
    version,
    about = "Sequential design for expensive black-box functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sampler against a built-in test function.
    Run(RunArgs),
    /// Create a run directory for an external evaluator (ask/tell mode).
    Init(InitArgs),
    /// Write the next point to evaluate to `<dir>/proposed.csv`.
    Ask(DirArgs),
    /// Read `<dir>/observed.csv` and record the response.
    Tell(DirArgs),
    /// Compare the closed-form noise-sum moments with Monte Carlo.
    NoiseReport(NoiseReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionName {
    Peaks,
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Hybrid,
    VoronoiOnly,
}

#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    /// Input dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Lower bound: one value for every axis or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub lower: Option<String>,
    /// Upper bound: one value for every axis or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub upper: Option<String>,
    /// Total number of evaluations, initial design included.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Output-noise variance λ.
    #[arg(long, default_value_t = 0.0)]
    pub noise_lambda: f64,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum neighborhood size (default 2·dim).
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// Monte-Carlo pool size (default max(1000, 100·n)).
    #[arg(long)]
    pub mc_points: Option<usize>,
    /// `corners_center`, `latin_hypercube` or `latin_hypercube:SIZE`.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Hybrid)]
    pub strategy: StrategyArg,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, required_unless_present = "config")]
    pub function: Option<FunctionName>,
    /// Linear coefficients `a0,a1,...,ad` for `a0 + Σ a_k x_k`.
    #[arg(long, allow_hyphen_values = true)]
    pub coefficients: Option<String>,
    /// Quadratic form matrix, row-major `d·d` comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Re-run exactly the configuration recorded in a `run.json`.
    #[arg(long, conflicts_with = "function")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DirArgs {
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseReportArgs {
    /// Largest neighborhood size T.
    #[arg(long, default_value_t = 4)]
    pub t_max: usize,
    /// Comma-separated noise variances.
    #[arg(long, default_value = "0,0.5,1,2")]
    pub lambda_list: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path.
    #[arg(long, default_value = "noise_report.csv")]
    pub out: PathBuf,
}
