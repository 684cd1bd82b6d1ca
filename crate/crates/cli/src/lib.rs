//! Command-line front end for the `mfmomp` solvers.
//!
//! `mfmomp solve <instance>` runs one method and prints a JSON report;
//! `mfmomp bench <manifest>` runs a grid of configurations and prints CSV.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mfmomp::NormSpec;

pub mod bench;
pub mod error;
pub mod instance;
pub mod options;
pub mod report;

pub use error::{CliError, CliResult};
pub use report::{Report, RunSettings, Status};

use options::{LambdaSpec, Method};
use report::Pricing;

pub const DEFAULT_TIME_LIMIT: f64 = 7200.0;

#[derive(Debug, Parser)]
#[command(name = "mfmomp", version, about = "Multifacility ordered median location solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and print a JSON report.
    Solve(SolveArgs),
    /// Run every combination of a TOML manifest and print CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance file: an `n d p` line followed by n coordinate lines.
    instance: PathBuf,
    /// bnp | matheur | kmean:<m> | ptf:<m> | grid-oracle:<res> | partition-oracle
    #[arg(long, default_value = "bnp")]
    method: Method,
    /// W | C | K:<k> | D:<alpha> | S:<k>:<alpha> | A | @<file>
    #[arg(long, default_value = "W")]
    lambda: LambdaSpec,
    /// l1 | l2 | ltau:<r>/<s>
    #[arg(long, default_value = "l1", value_parser = options::parse_norm)]
    norm: NormSpec,
    /// Number of facilities; defaults to the value in the instance header.
    #[arg(long)]
    p: Option<usize>,
    /// Branching θ in [0, 1], or `auto` to pick it from the λ kind.
    #[arg(long, default_value = "auto")]
    theta: String,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rounds used to build the initial column pool.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    rounds: u64,
    /// Relative optimality tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value = "heuristic-first")]
    pricing: Pricing,
    /// Indent the JSON output.
    #[arg(long)]
    pretty: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// TOML manifest listing instances, methods, λ kinds and p values.
    manifest: PathBuf,
    /// Maximum number of runs in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Runs the command line `argv` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the process exit code: 0 done,
/// 2 time limit reached, 3 invalid input, 1 anything else.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    3
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Bench(a) => run_bench(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn solve(a: SolveArgs, out: &mut dyn Write) -> CliResult<i32> {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    if !(a.time_limit >= 0.0) {
        return Err(CliError::Usage(format!("--time-limit must be nonnegative, got {}", a.time_limit)));
    }
    let settings = RunSettings {
        method: a.method,
        lambda: a.lambda,
        norm: a.norm,
        p: a.p,
        theta: options::parse_theta(&a.theta)?,
        time_limit: a.time_limit,
        seed: a.seed,
        rounds: a.rounds as usize,
        tol: a.tol,
        pricing: a.pricing,
    };
    let report = report::run_method(&a.instance, &settings)?;
    let text = if a.pretty { serde_json::to_string_pretty(&report) } else { serde_json::to_string(&report) }
        .expect("report serializes");
    writeln!(out, "{text}").map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
    Ok(report.status.exit_code())
}

fn run_bench(a: BenchArgs, out: &mut dyn Write) -> CliResult<i32> {
    match &a.output {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            bench::bench(&a.manifest, a.jobs, &mut f)?;
        }
        None => {
            bench::bench(&a.manifest, a.jobs, out)?;
        }
    }
    Ok(0)
}
