//! `ioncluster`: couplings, normal modes, wells, transport schedules,
//! periodicity searches and regression datasets.

mod commands;
mod error;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ioncluster::sequences::ExecutionMode;

use error::CliError;
use output::Run;

#[derive(Debug, Parser)]
#[command(name = "ioncluster", version, about)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "IONCLUSTER_OUT", default_value = "ioncluster-out")]
    out: PathBuf,
    /// Seed for measurement sampling and searches.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coupling matrix and normal modes of a crystal.
    Couplings {
        #[arg(long)]
        config: PathBuf,
    },
    /// Equilibrium positions and normal modes of a crystal.
    Modes {
        #[arg(long)]
        config: PathBuf,
    },
    /// Local minima of a potential with harmonic fits.
    Wells {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compile or execute transport schedules.
    Schedule {
        #[command(subcommand)]
        action: ScheduleAction,
    },
    /// Periodicity parameter searches.
    Periodic {
        #[command(subcommand)]
        action: PeriodicAction,
    },
    /// Regenerate a regression dataset and compare it with stored values.
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
    },
}

#[derive(Debug, Subcommand)]
enum ScheduleAction {
    /// Compile the schedule for a `rows × 2` cluster.
    Build {
        #[arg(long)]
        rows: usize,
        /// Field gradient, T/m.
        #[arg(long, default_value_t = 100.0)]
        gradient: f64,
    },
    /// Execute a schedule file written by `schedule build`.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Well catalogs; defaults to the uniform catalog.
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Ideal)]
        mode: Mode,
    },
}

#[derive(Debug, Subcommand)]
enum PeriodicAction {
    /// Differential-evolution search over well and trap parameters.
    Search {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Ideal,
    Residual,
}

fn dispatch(cli: &Cli, run: &mut Run) -> Result<(), CliError> {
    match &cli.command {
        Command::Couplings { config } => commands::couplings(run, config),
        Command::Modes { config } => commands::modes(run, config),
        Command::Wells { config } => commands::wells(run, config),
        Command::Schedule { action: ScheduleAction::Build { rows, gradient } } => {
            commands::schedule_build(run, *rows, *gradient)
        }
        Command::Schedule { action: ScheduleAction::Run { config, library, mode } } => {
            let mode = match mode {
                Mode::Ideal => ExecutionMode::Ideal,
                Mode::Residual => ExecutionMode::Residual,
            };
            commands::schedule_run(run, config, library.as_deref(), mode, cli.seed)
        }
        Command::Periodic { action: PeriodicAction::Search { config, budget } } => {
            commands::periodic_search(run, config, cli.seed, *budget)
        }
        Command::Reproduce { target } => reproduce::reproduce(run, *target, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    let mut run = Run::new(std::env::args().collect());
    let result = dispatch(&cli, &mut run).and_then(|()| run.finish(&cli.out));
    match result {
        Ok(report) => {
            for (k, v) in &report.metrics {
                println!("{k} = {v}");
            }
            println!("wrote {} file(s) to {}", report.outputs.len(), cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
