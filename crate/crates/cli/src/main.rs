//! `embedplan`: generate model specs, plan table placement, simulate the
//! pipeline and run the functional engine.
//!
//! Exit codes: 0 ok, 2 input error, 3 infeasible, 4 internal error.
//! Log level comes from `EMBEDPLAN_LOG` (`error`, `info`, `debug`).

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use embedplan_core::model::CapacityRegime;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "embedplan",
    version,
    about = "Embedding table combination and placement planner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Regime {
    Ample,
    Tight,
}

impl From<Regime> for CapacityRegime {
    fn from(r: Regime) -> Self {
        match r {
            Regime::Ample => CapacityRegime::Ample,
            Regime::Tight => CapacityRegime::Tight,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic model spec with the default memory hierarchy.
    Gen {
        /// Size profile: default, table3-small or table3-large.
        #[arg(long, default_value = "default")]
        profile: String,
        /// Table count; defaults to the profile's fixed count, or 47.
        #[arg(long)]
        tables: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan placement and print a report as JSON.
    Plan {
        spec: PathBuf,
        /// Keep every table separate.
        #[arg(long)]
        no_cartesian: bool,
        /// Also run the exhaustive planner (at most 8 tables) and report its cost.
        #[arg(long)]
        oracle: bool,
        /// Include wall-clock planner time; makes the report run-dependent.
        #[arg(long)]
        timing: bool,
        /// Items for the bundled pipeline simulation.
        #[arg(long, default_value_t = 1)]
        items: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the lookup stage and the pipelined dataflow.
    Simulate {
        spec: PathBuf,
        /// Plan or report from `plan`; the heuristic plan when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        items: u64,
        /// Fixed cost added to every lookup, in ns.
        #[arg(long, default_value_t = 0.0)]
        overhead_ns: f64,
        /// Also write per-stage times as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Look up and score queries (one JSON index array per line), one CTR per line.
    Run {
        spec: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        queries: PathBuf,
        /// 16 (Q1.15 fixed point) or 32 (floating point).
        #[arg(long, default_value_t = 32)]
        precision: u32,
        /// Seeds table contents and MLP weights.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the heuristic with the exhaustive planner; prints CSV.
    Compare {
        /// Seeds 0..SEEDS per table count.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = Regime::Ample)]
        regime: Regime,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen {
            profile,
            tables,
            seed,
            out,
        } => commands::gen(&profile, tables, seed, out.as_deref()),
        Command::Plan {
            spec,
            no_cartesian,
            oracle,
            timing,
            items,
            out,
        } => commands::plan(
            &spec,
            &commands::PlanFlags {
                no_cartesian,
                oracle,
                timing,
                items,
            },
            out.as_deref(),
        ),
        Command::Simulate {
            spec,
            plan,
            items,
            overhead_ns,
            csv,
            out,
        } => commands::simulate(
            &spec,
            plan.as_deref(),
            items,
            overhead_ns,
            csv.as_deref(),
            out.as_deref(),
        ),
        Command::Run {
            spec,
            plan,
            queries,
            precision,
            seed,
            out,
        } => commands::run(
            &spec,
            plan.as_deref(),
            &queries,
            precision,
            seed,
            out.as_deref(),
        ),
        Command::Compare {
            seeds,
            n_min,
            n_max,
            regime,
            out,
        } => commands::compare(seeds, n_min, n_max, regime.into(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EMBEDPLAN_LOG", "error"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
