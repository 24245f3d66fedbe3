//! Command-line front end for `rowsolve`: problem generation, solver
//! traces, oracles, bound verification and per-update benchmarks.

pub mod bench;
pub mod config;
pub mod error;
pub mod generate;
pub mod oracle;
pub mod solve;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{
    load_experiment_config, parse_eta_grid, parse_experiment_config, EtaGrid, ExperimentConfig, GeneratorSpec,
    MassChoice, MassParams, ProblemSource, SamplerChoice, SolverSpec,
};
pub use error::{CliError, CliResult};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ROWSOLVE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rowsolve", version, about = "Randomized block row-access least-squares solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a problem bundle.
    Generate(GenerateArgs),
    /// Run solvers and write one trace CSV per (solver, seed).
    Solve(SolveArgs),
    /// Compute the limit quantities of an iteration and write oracle.json.
    Oracle(OracleArgs),
    /// Check theorem bounds and exit 1 if any fails.
    Verify(VerifyArgs),
    /// Time a single update of each mass kind.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Gaussian,
    Chebyshev,
    Isosceles,
    Noisy,
    Random,
    Load,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Chebyshev only: singular values of `C` decay like `i^-decay`.
    #[arg(long)]
    pub decay: Option<f64>,
    /// `flat`, `poly:BETA` or a comma-separated list of singular values.
    #[arg(long, default_value = "flat")]
    pub spectrum: String,
    #[arg(long, default_value_t = 1e-2)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planted solution, comma-separated; defaults to a standard normal draw.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub planted: Option<Vec<f64>>,
    /// Noisy only: take `A` from this bundle.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Load only: bundle to read.
    #[arg(long)]
    pub path: Option<PathBuf>,
    #[arg(long, default_value = "bundle")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MassArgs {
    #[arg(long)]
    pub mass: Option<MassChoice>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub rank_tol: Option<f64>,
    #[arg(long, default_value = "uniform")]
    pub sampler: SamplerChoice,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Experiment JSON; the flags below are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundle directory.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[command(flatten)]
    pub mass: MassArgs,
    #[arg(long = "T")]
    pub total_iters: Option<usize>,
    #[arg(long = "T-b")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub tb_frac: Option<f64>,
    /// `grid:lo..hi`
    #[arg(long)]
    pub tune_eta: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Label used in output file names.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Write zeros in the wall_seconds column so traces are byte-reproducible.
    #[arg(long)]
    pub no_wall_clock: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OracleModeArg {
    #[default]
    Enumerate,
    Montecarlo,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[command(flatten)]
    pub mass: MassArgs,
    #[arg(long, value_enum, default_value = "enumerate")]
    pub mode: OracleModeArg,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for oracle.json; printed only when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Check this many random 12x4 problems with k = 3 under RBK and ReBlocK.
    #[arg(long, conflicts_with_all = ["oracle", "problem"])]
    pub random: Option<usize>,
    /// Previously written oracle.json; needs --problem.
    #[arg(long, requires = "problem")]
    pub oracle: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[command(flatten)]
    pub mass: MassArgs,
    #[arg(long, value_enum, default_value = "enumerate")]
    pub mode: OracleModeArg,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Test hook: doubles W̄ before checking.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = rowsolve::solvers::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Directory for bench.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match thread_pool() {
        Ok(Some(pool)) => pool.install(|| dispatch(cli.command)),
        Ok(None) => dispatch(cli.command),
        Err(e) => Err(e),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_pool() -> CliResult<Option<rayon::ThreadPool>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| CliError::Numeric(format!("cannot start {threads} worker threads: {e}")))
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Generate(a) => generate::cmd_generate(&a),
        Command::Solve(a) => solve::cmd_solve(&a),
        Command::Oracle(a) => oracle::cmd_oracle(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn parse_errors_exit_2() {
        assert_eq!(run_cli(["rowsolve", "generate", "--family", "triangle"]), 2);
        assert_eq!(run_cli(["rowsolve", "frobnicate"]), 2);
        assert_eq!(run_cli(["rowsolve", "--help"]), 0);
    }
}
