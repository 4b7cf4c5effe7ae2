//! Command-line front end: kriging runs, scenario evaluation, synthetic
//! data generation and the embedded oracle self-test.

mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::Overrides;

#[derive(Parser)]
#[command(
    name = "letc",
    version,
    about = "Laplacian-enhanced low-rank tensor completion for spatiotemporal kriging"
)]
struct Cli {
    /// Worker thread cap (default: machine parallelism, or LETC_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the complete speed field from an observed value table.
    Krige(KrigeArgs),
    /// Apply masking scenarios, solve, and report held-out accuracy.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset with known ground truth.
    Generate(GenerateArgs),
    /// Run the embedded oracle suite.
    Selftest(SelftestArgs),
}

/// Solver and graph settings shared by the solving subcommands. Flags
/// override the config file, which overrides the built-in defaults.
#[derive(Args, Clone, Default)]
struct SolverFlags {
    /// Structured key-value config file (a run manifest works).
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Spatial penalty weight.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Temporal penalty weight.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Temporal kernel window size.
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    mu_growth: Option<f64>,
    #[arg(long)]
    mu_max: Option<f64>,
    /// Convergence threshold on the relative change of the estimate.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    cg_iters: Option<usize>,
    #[arg(long)]
    rank_init: Option<usize>,
    #[arg(long)]
    rank_step: Option<usize>,
    #[arg(long)]
    rank_cap: Option<usize>,
    #[arg(long)]
    power_iters: Option<usize>,
    #[arg(long)]
    oversample: Option<usize>,
    /// Use the exact thresholding operator instead of the sketched one.
    #[arg(long)]
    exact_svt: bool,
    /// Diffusion kernel: one-step, high-order:K, ppr:A, heat:T, bidirectional.
    #[arg(long)]
    kernel: Option<String>,
    /// Day-graph period in days.
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    omega_day: Option<f64>,
    #[arg(long)]
    omega_period: Option<f64>,
    /// Geometric decay of the period weight, in (0, 1).
    #[arg(long)]
    decay: Option<f64>,
    /// Weekend day-to-day weights as WEIGHT:DAYS, e.g. 0.5:2.
    #[arg(long)]
    weekend: Option<String>,
    /// Degree used for the random-walk normalization: out or in.
    #[arg(long)]
    degree_mode: Option<String>,
    /// Gaussian kernel bandwidth (default: deviation of edge distances).
    #[arg(long)]
    sigma: Option<f64>,
    /// Gaussian kernel scale multiplier.
    #[arg(long)]
    delta: Option<f64>,
    /// Edge radius quantile for coordinate graphs.
    #[arg(long)]
    radius_quantile: Option<f64>,
    /// Base seed; all randomness derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Initialize unobserved entries with column means instead of zeros.
    #[arg(long)]
    init_column_mean: bool,
}

impl SolverFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            tau: self.tau,
            mu0: self.mu0,
            mu_growth: self.mu_growth,
            mu_max: self.mu_max,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            cg_iters: self.cg_iters,
            rank_init: self.rank_init,
            rank_step: self.rank_step,
            rank_cap: self.rank_cap,
            power_iters: self.power_iters,
            oversample: self.oversample,
            exact_svt: self.exact_svt.then_some(true),
            kernel: self.kernel.clone(),
            period: self.period,
            omega_day: self.omega_day,
            omega_period: self.omega_period,
            decay: self.decay,
            weekend: self.weekend.clone(),
            degree_mode: self.degree_mode.clone(),
            seed: self.seed,
            init_column_mean: self.init_column_mean.then_some(true),
            sigma: self.sigma,
            delta: self.delta,
            radius_quantile: self.radius_quantile,
        }
    }

    /// defaults < config file < flags.
    fn resolve(&self) -> Result<(letc::solver::SolverConfig, letc::harness::GraphOptions), letc::Error> {
        let layered = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        }
        .merged_with(&self.overrides());
        layered.resolve()
    }
}

#[derive(Args)]
struct KrigeArgs {
    /// Value table: header of location ids, one row per time point.
    #[arg(long)]
    values: std::path::PathBuf,
    /// Graph file: src,dst,distance edges or id,x,y coordinates.
    #[arg(long)]
    graph: std::path::PathBuf,
    /// Time points per day; must divide the number of data rows.
    #[arg(long)]
    intervals_per_day: usize,
    /// Output directory for the estimate, diagnostics and manifest.
    #[arg(long, default_value = "letc-out")]
    out: std::path::PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    values: std::path::PathBuf,
    #[arg(long)]
    graph: std::path::PathBuf,
    #[arg(long)]
    intervals_per_day: usize,
    /// Fractions of locations to hide, comma separated.
    #[arg(long, default_value = "0.3")]
    sm: String,
    /// Fractions of time intervals to hide, comma separated.
    #[arg(long, default_value = "0.2")]
    tm: String,
    /// Fractions of surviving entries to hide, comma separated.
    #[arg(long, default_value = "0.2")]
    em: String,
    /// Repetitions per scenario; repeat r uses scenario seed seed + r.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Grid of spatial weights (overrides --lambda1 when given).
    #[arg(long)]
    lambda1_grid: Option<String>,
    /// Grid of temporal weights (overrides --lambda2 when given).
    #[arg(long)]
    lambda2_grid: Option<String>,
    /// Grid of kernel windows (overrides --tau when given).
    #[arg(long)]
    tau_grid: Option<String>,
    /// Optional output directory for the results table and manifest.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    locations: usize,
    #[arg(long, default_value_t = 48)]
    intervals_per_day: usize,
    #[arg(long, default_value_t = 14)]
    days: usize,
    /// Weekly period of the synthetic pattern, in days.
    #[arg(long, default_value_t = 7)]
    period: usize,
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for values.csv, graph.csv, truth.csv, manifest.
    #[arg(long, default_value = "letc-data")]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    /// Print the check inventory without running anything.
    #[arg(long)]
    list: bool,
    /// Inject a failure into the named check (a test of the tester).
    #[arg(long)]
    fault: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let threads = cli.threads.or_else(|| {
        std::env::var("LETC_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            eprintln!("letc: cannot configure {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }

    let outcome = match cli.command {
        Command::Krige(args) => commands::krige(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Generate(args) => commands::generate(&args),
        Command::Selftest(args) => commands::selftest(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("letc: {e}");
            ExitCode::from(1)
        }
    }
}
