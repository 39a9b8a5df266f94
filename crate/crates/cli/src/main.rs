//! `erwlab` — elephant random walk laboratory.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical/acceptance failure.

use std::path::PathBuf;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use erwlab::check::{CheckConfig, Suite};
use erwlab::ensemble::DEFAULT_STEP_BUDGET;
use erwlab::walk::{WalkError, WalkParams};

use erwlab_cli::commands::{cmd_check, cmd_rerun, execute, RunConfig, What};
use erwlab_cli::output::Format;

#[derive(Parser)]
#[command(
    name = "erwlab",
    version,
    about = "Elephant random walk laboratory: exact oracle, seeded ensembles, verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SimArgs {
    /// Memory parameter, 0 < p < 1 (regimes split exactly at 0.75)
    #[arg(long)]
    p: f64,
    /// First-step up-probability
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Steps per walk
    #[arg(long)]
    horizon: u64,
    /// Independent replicas
    #[arg(long)]
    replicas: u64,
    /// Master seed; replica streams are derived from it
    #[arg(long)]
    seed: u64,
    /// Comma-separated checkpoint steps (default: the horizon)
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<u64>,
    /// Worker threads (0 = all cores); never changes results
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// First step tracked by the LIL sup-statistics
    #[arg(long, default_value_t = erwlab::ensemble::DEFAULT_N_MIN_LIL)]
    n_min_lil: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SuiteArg {
    Oracle,
    Clt,
    Scaling,
    Meeting,
    Limit,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(value: SuiteArg) -> Self {
        match value {
            SuiteArg::Oracle => Suite::Oracle,
            SuiteArg::Clt => Suite::Clt,
            SuiteArg::Scaling => Suite::Scaling,
            SuiteArg::Meeting => Suite::Meeting,
            SuiteArg::Limit => Suite::Limit,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact oracle dumps: pmf, moment series, meeting table, difference pmf
    Oracle {
        /// Memory parameter, 0 < p < 1
        #[arg(long)]
        p: f64,
        /// First-step up-probability
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        /// Step count
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = What::All)]
        what: What,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Ensemble of single walks: raw and normalized moments per checkpoint
    Ensemble(SimArgs),
    /// Ensemble of independent pairs: meetings, differences, sup statistics
    Pair(SimArgs),
    /// Run a verification suite and print its pass/fail table
    Check {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        /// Master seed for the Monte Carlo suites
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Override the replica counts (rejected below a suite's budgeted
        /// precision)
        #[arg(long)]
        replicas: Option<u64>,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Re-run a recorded command from its manifest (byte-identical data)
    Rerun {
        /// Path to a manifest.json written by a previous run
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for the replay
        #[arg(long, default_value = "rerun-out")]
        out: PathBuf,
    },
}

/// `ERWLAB_BUDGET` overrides the `horizon * replicas` step budget.
fn resolve_budget() -> Result<u64, String> {
    match std::env::var("ERWLAB_BUDGET") {
        Err(_) => Ok(DEFAULT_STEP_BUDGET),
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("ERWLAB_BUDGET must be a nonnegative integer, got '{text}'")),
    }
}

fn checkpoints_or_horizon(mut checkpoints: Vec<u64>, horizon: u64) -> Vec<u64> {
    if checkpoints.is_empty() {
        return vec![horizon];
    }
    checkpoints.sort_unstable();
    checkpoints.dedup();
    checkpoints
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Oracle {
            p,
            s,
            n,
            what,
            format,
            out,
        } => {
            validate_params(p, s)?;
            let config = RunConfig::Oracle { p, s, n, what, format };
            execute(&config, &out)?;
            Ok(0)
        }
        Command::Ensemble(args) => {
            validate_params(args.p, args.s)?;
            let budget = resolve_budget().map_err(UsageError)?;
            let config = RunConfig::Ensemble {
                p: args.p,
                s: args.s,
                horizon: args.horizon,
                replicas: args.replicas,
                checkpoints: checkpoints_or_horizon(args.checkpoints, args.horizon),
                master_seed: args.seed,
                workers: args.workers,
                n_min_lil: args.n_min_lil,
                budget,
                format: args.format,
            };
            execute(&config, &args.out)?;
            Ok(0)
        }
        Command::Pair(args) => {
            validate_params(args.p, args.s)?;
            let budget = resolve_budget().map_err(UsageError)?;
            let config = RunConfig::Pair {
                p: args.p,
                s: args.s,
                horizon: args.horizon,
                replicas: args.replicas,
                checkpoints: checkpoints_or_horizon(args.checkpoints, args.horizon),
                master_seed: args.seed,
                workers: args.workers,
                n_min_lil: args.n_min_lil,
                budget,
                format: args.format,
            };
            execute(&config, &args.out)?;
            Ok(0)
        }
        Command::Check {
            suite,
            seed,
            replicas,
            workers,
        } => {
            let cfg = CheckConfig {
                master_seed: seed,
                replicas_override: replicas,
                workers,
            };
            cmd_check(suite.into(), &cfg)
        }
        Command::Rerun { manifest, out } => {
            cmd_rerun(&manifest, &out)?;
            Ok(0)
        }
    }
}

/// Parameter-range mistakes are usage errors (exit 1), not numerical ones.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn validate_params(p: f64, s: f64) -> Result<()> {
    match WalkParams::new(p, s) {
        Ok(_) => Ok(()),
        Err(err @ (WalkError::MemoryOutOfRange(_) | WalkError::FirstStepOutOfRange(_))) => {
            Err(UsageError(err.to_string()).into())
        }
        Err(err) => Err(err.into()),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.downcast_ref::<UsageError>().is_some() {
                1
            } else {
                2
            };
            std::process::exit(code);
        }
    }
}
