//! Experiment driver behind the `rankflow` binary.
//!
//! Every subcommand reads one TOML [`ExperimentConfig`] and writes tables
//! (CSV or JSON) plus a JSON summary into the output directory.

mod commands;
mod config;
mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    analytic, compare, effective_z, pde_check, simulate, ExperimentReport, Record, RunContext,
};
pub use config::{
    BlockSpec, ExperimentConfig, LawSpec, OutputSpec, PdeSpec, ProfileSpec, RatesMode, TestHooks,
    Tolerances,
};
pub use table::{Cell, Format, Table};

/// Exit status for a bad configuration or command line.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when `compare` finds a failing record.
pub const EXIT_MISMATCH: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "rankflow",
    version,
    about = "Move-to-front ranking: limit formulas and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate the limit formulas.
    Analytic(CommonArgs),
    /// Simulate the finite list.
    Simulate(CommonArgs),
    /// Simulate and test against the limit formulas.
    Compare(CommonArgs),
    /// Finite-difference check of the tail-mass PDE.
    PdeCheck(CommonArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to the config's, then `rankflow-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when unset.
    #[arg(long, env = "RANKFLOW_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Analytic(a)
            | Command::Simulate(a)
            | Command::Compare(a)
            | Command::PdeCheck(a) => a,
        }
    }
}

fn context(args: &CommonArgs) -> anyhow::Result<RunContext> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(|d| cfg.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("rankflow-out"));
    std::fs::create_dir_all(&out)?;
    Ok(RunContext {
        cfg,
        out,
        format: args.format,
    })
}

/// Runs one command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let args = cli.command.args().clone();
    let ctx = match context(&args) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.threads {
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    pool.install(|| {
        let outcome = match &cli.command {
            Command::Analytic(_) => analytic(&ctx).map(|_| 0),
            Command::Simulate(_) => {
                let started = std::time::Instant::now();
                let r = simulate(&ctx).map(|_| 0);
                eprintln!(
                    "simulate finished in {:.2}s",
                    started.elapsed().as_secs_f64()
                );
                r
            }
            Command::Compare(_) => compare(&ctx).map(|report| {
                let failed = report.records.iter().filter(|r| !r.pass).count();
                eprintln!("{} records, {failed} failed", report.records.len());
                if failed == 0 {
                    0
                } else {
                    EXIT_MISMATCH
                }
            }),
            Command::PdeCheck(_) => pde_check(&ctx).map(|_| 0),
        };
        outcome.unwrap_or_else(|e| {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        })
    })
}
