use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use wavekit_cli::checks::all_checks;
use wavekit_cli::config::Scenario;
use wavekit_cli::plot::emit_plot_data;
use wavekit_cli::run::{execute, write_run, RunError};

#[derive(Parser)]
#[command(name = "wavekit", version, about = "Phase-space wave propagation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (default: `out` next to the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `tolerances.probe_seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write two-column plot data for a finished run.
    Plot { run_dir: PathBuf },
    /// Run the built-in acceptance checks.
    Selftest,
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), RunError> {
    let clock = Instant::now();
    let scenario = Scenario::load(&config)?;
    let report = execute(&scenario, seed)?;
    let dir = out.unwrap_or_else(|| config.parent().map(|p| p.join("out")).unwrap_or_else(|| "out".into()));
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_run(&dir, &report, clock.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, seed } => match run(config, out, seed) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Plot { run_dir } => match emit_plot_data(&run_dir) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Selftest => {
            let checks = all_checks();
            for c in &checks {
                println!("{}", c.line());
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
