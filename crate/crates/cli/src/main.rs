//! `sst`: single-shot work extraction from the command line.
//!
//! Exit codes: 0 ok, 1 output failure, 2 invalid input, 3 failed precondition,
//! 4 exact enumeration cap exceeded.

mod commands;
mod error;
mod input;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sst_core::game::{Strategy, StrategyFile};
use sst_core::protocol::RunMode;
use sst_core::{DiagonalState, Rational};

use commands::{CurveRequest, Emit, ProtocolRequest};
use error::{CliError, CliResult};
use input::{parse_num, read_state, read_strategy, resolve_kt, to_strategy, Backend, StateFile};
use output::{write_file, Units};

/// Environment variable capping the worker threads used by Monte Carlo runs.
const THREADS_VAR: &str = "SST_THREADS";

const AFTER_HELP: &str = "\
Numbers: exact mode is used when every input file sets \"exact\": true; values are then
printed as \"p/q\" strings and work symbolically, e.g. \"ln(4/3)\".

Exit codes: 0 ok, 1 output failure, 2 invalid input, 3 failed precondition,
4 exact enumeration cap exceeded.

Environment: SST_THREADS caps the number of worker threads.";

#[derive(Debug, Parser)]
#[command(name = "sst", version, about = "Single-shot work extraction between diagonal states")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    /// Unit for work values: nats (kT ln m), bits (log2 m) or kT (ln m).
    #[arg(long, value_enum, default_value = "nats", global = true)]
    units: Units,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extractable work from one state to another at failure probability eps.
    #[command(after_help = "CSV written by --curve, one row per point:
  series  work | lorenz_in | lorenz_out
  x       eps for work rows, extent l for Lorenz rows
  y       work in the chosen units, or the cumulative mass at l
  factor  work factor m (work rows only)")]
    Work {
        state_in: PathBuf,
        state_out: PathBuf,
        #[arg(long, default_value = "0")]
        eps: String,
        #[command(flatten)]
        kt: KtArg,
        /// Write the work curve over an eps grid and both Lorenz curves as CSV.
        #[arg(long, value_name = "CSV")]
        curve: Option<PathBuf>,
        /// Number of grid points k/N, k = 0..N-1, for --curve.
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
    /// Entropies of the Gibbs-rescaled spectrum, in bits.
    Entropy {
        state_in: PathBuf,
        #[arg(long, default_value = "0")]
        eps: String,
    },
    /// Sample realizations of a strategy; CSV on stdout, summary JSON on stderr.
    #[command(after_help = "CSV columns, one row per realization in index order:
  index, initial_level, final_level (empty after an escape), escaped, success,
  logwork (product of credited factors), work (in the chosen units),
  d_e_sys, d_e_bath, d_w, d_e_extra (energy ledger; empty after an escape)")]
    Simulate {
        state_in: PathBuf,
        strategy_in: PathBuf,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        target: TargetArg,
        #[command(flatten)]
        kt: KtArg,
        /// Write the summary JSON here instead of stderr.
        #[arg(long, value_name = "JSON")]
        summary: Option<PathBuf>,
    },
    /// Check the work bound on every path of a strategy by exact enumeration.
    Audit {
        state_in: PathBuf,
        strategy_in: PathBuf,
        #[command(flatten)]
        target: TargetArg,
        #[command(flatten)]
        kt: KtArg,
    },
    /// Build and run the optimal extraction protocol.
    Protocol {
        state_in: PathBuf,
        state_out: PathBuf,
        #[arg(long, default_value = "0")]
        eps: String,
        /// Enumerate every path (the default).
        #[arg(long, conflicts_with = "runs")]
        exact: bool,
        /// Sample this many realizations instead of enumerating.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        kt: KtArg,
        /// Write the generated strategy file.
        #[arg(long, value_name = "JSON")]
        emit_strategy: Option<PathBuf>,
        /// Write the padded initial state the strategy starts from.
        #[arg(long, value_name = "JSON")]
        emit_initial: Option<PathBuf>,
    },
    /// Compare the entropy test with the majorization test for a transition.
    Laws {
        state_in: PathBuf,
        state_out: PathBuf,
        /// Inverse temperature; defaults to 1/kT of the files.
        #[arg(long)]
        beta: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct KtArg {
    /// Temperature; defaults to the files' kT, then 1.
    #[arg(long = "kT", value_name = "KT")]
    kt: Option<f64>,
}

#[derive(Debug, Args)]
struct TargetArg {
    /// Work target: ln(p/q) names the factor, a plain number is work in --units.
    /// Defaults to the strategy file's target.
    #[arg(long, value_name = "W", allow_hyphen_values = true)]
    target_w: Option<String>,
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input(format!("{THREADS_VAR}: expected a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::input(format!("{THREADS_VAR}: {e}")))
}

fn states<T: Backend>(files: &[&StateFile]) -> CliResult<Vec<DiagonalState<T>>> {
    files.iter().map(|f| f.to_state()).collect()
}

fn with_target<T: Backend>(file: &StrategyFile, target: &TargetArg, units: Units, kt: f64) -> CliResult<Strategy<T>> {
    let mut strategy = to_strategy::<T>(file)?;
    if let Some(text) = &target.target_w {
        strategy.target = commands::parse_target(text, units, kt)?;
    }
    Ok(strategy)
}

fn usize_arg(value: u64, flag: &str) -> CliResult<usize> {
    usize::try_from(value).map_err(|_| CliError::input(format!("{flag}: too large")))
}

/// Each arm reads its files, then runs in exact mode when every input is exact.
fn run(cli: Cli) -> CliResult<Emit> {
    let units = cli.units;
    match cli.command {
        Command::Work { state_in, state_out, eps, kt, curve, grid } => {
            let (a, b) = (read_state(&state_in)?, read_state(&state_out)?);
            let kt = resolve_kt(kt.kt, &[&a, &b])?;
            let curve = curve.as_deref().map(|path| CurveRequest { path, grid });
            fn go<T: Backend>(
                a: &StateFile,
                b: &StateFile,
                eps: &str,
                kt: f64,
                units: Units,
                curve: Option<CurveRequest<'_>>,
            ) -> CliResult<Emit> {
                let s = states::<T>(&[a, b])?;
                commands::work(&s[0], &s[1], &parse_num(eps, "--eps")?, kt, units, curve)
            }
            if a.exact && b.exact {
                go::<Rational>(&a, &b, &eps, kt, units, curve)
            } else {
                go::<f64>(&a, &b, &eps, kt, units, curve)
            }
        }
        Command::Entropy { state_in, eps } => {
            let a = read_state(&state_in)?;
            fn go<T: Backend>(a: &StateFile, eps: &str) -> CliResult<Emit> {
                commands::entropy(&a.to_state::<T>()?, &parse_num(eps, "--eps")?)
            }
            if a.exact {
                go::<Rational>(&a, &eps)
            } else {
                go::<f64>(&a, &eps)
            }
        }
        Command::Simulate { state_in, strategy_in, runs, seed, target, kt, summary } => {
            let (a, plan) = (read_state(&state_in)?, read_strategy(&strategy_in)?);
            let kt = resolve_kt(kt.kt, &[&a])?;
            let runs = usize_arg(runs, "--runs")?;
            fn go<T: Backend>(
                a: &StateFile,
                plan: &StrategyFile,
                target: &TargetArg,
                runs: usize,
                seed: u64,
                kt: f64,
                units: Units,
            ) -> CliResult<Emit> {
                let strategy = with_target::<T>(plan, target, units, kt)?;
                commands::simulate(&a.to_state::<T>()?, &strategy, runs, seed, kt, units)
            }
            let mut emit = if a.exact && plan.exact {
                go::<Rational>(&a, &plan, &target, runs, seed, kt, units)?
            } else {
                go::<f64>(&a, &plan, &target, runs, seed, kt, units)?
            };
            if let Some(path) = &summary {
                write_file(path, &emit.stderr.take().unwrap_or_default())?;
            }
            Ok(emit)
        }
        Command::Audit { state_in, strategy_in, target, kt } => {
            let (a, plan) = (read_state(&state_in)?, read_strategy(&strategy_in)?);
            let kt = resolve_kt(kt.kt, &[&a])?;
            fn go<T: Backend>(a: &StateFile, plan: &StrategyFile, target: &TargetArg, kt: f64, units: Units) -> CliResult<Emit> {
                commands::audit(&a.to_state::<T>()?, &with_target::<T>(plan, target, units, kt)?)
            }
            if a.exact && plan.exact {
                go::<Rational>(&a, &plan, &target, kt, units)
            } else {
                go::<f64>(&a, &plan, &target, kt, units)
            }
        }
        Command::Protocol { state_in, state_out, eps, exact: _, runs, seed, kt, emit_strategy, emit_initial } => {
            let (a, b) = (read_state(&state_in)?, read_state(&state_out)?);
            let kt = resolve_kt(kt.kt, &[&a, &b])?;
            let mode = match runs {
                None => RunMode::Exact,
                Some(runs) => RunMode::MonteCarlo { runs: usize_arg(runs, "--runs")?, seed, kt },
            };
            let req =
                ProtocolRequest { mode, emit_strategy: emit_strategy.as_deref(), emit_initial: emit_initial.as_deref() };
            fn go<T: Backend>(
                a: &StateFile,
                b: &StateFile,
                eps: &str,
                kt: f64,
                units: Units,
                req: ProtocolRequest<'_>,
            ) -> CliResult<Emit> {
                let s = states::<T>(&[a, b])?;
                commands::protocol(&s[0], &s[1], &parse_num(eps, "--eps")?, kt, units, req)
            }
            if a.exact && b.exact {
                go::<Rational>(&a, &b, &eps, kt, units, req)
            } else {
                go::<f64>(&a, &b, &eps, kt, units, req)
            }
        }
        Command::Laws { state_in, state_out, beta } => {
            let (a, b) = (read_state(&state_in)?, read_state(&state_out)?);
            let beta = match beta {
                Some(beta) => beta,
                None => 1.0 / resolve_kt(None, &[&a, &b])?,
            };
            fn go<T: Backend>(a: &StateFile, b: &StateFile, beta: f64, units: Units) -> CliResult<Emit> {
                let s = states::<T>(&[a, b])?;
                commands::laws(&s[0], &s[1], beta, units)
            }
            if a.exact && b.exact {
                go::<Rational>(&a, &b, beta, units)
            } else {
                go::<f64>(&a, &b, beta, units)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| run(cli));
    match outcome {
        Ok(emit) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(emit.stdout.as_bytes()).and_then(|()| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            if let Some(text) = emit.stderr {
                eprint!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
