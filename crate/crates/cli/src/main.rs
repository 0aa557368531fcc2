use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dhym_cli::config::{Mode, RunConfig, VerifySpec};
use dhym_cli::{emit_plot_data, run_config, run_file, RunOptions, RunOutcome, Status};
use dhym_core::suites::Suite;

#[derive(Parser)]
#[command(name = "dhym", version, about = "Numerical lab for the dHYM equation on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a JSON run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; results are identical for any value.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one randomized property suite.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract plot series from a finished run directory.
    Plot {
        #[arg(long)]
        run: PathBuf,
    },
}

fn report(outcome: &RunOutcome) -> ExitCode {
    let m = &outcome.manifest;
    match &m.failure {
        None => eprintln!("ok: {} run {}", m.mode.as_deref().unwrap_or("?"), m.run_id),
        Some(f) => eprintln!("{:?}: {}", f.kind, f.message),
    }
    if let Some(dir) = &outcome.dir {
        eprintln!("artifacts in {}", dir.display());
    }
    ExitCode::from(outcome.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, jobs, out } => report(&run_file(&config, &RunOptions { jobs, out })),
        Command::Verify {
            suite,
            samples,
            seed,
            jobs,
            out,
        } => {
            let config = RunConfig {
                mode: Mode::Verify,
                verify: Some(VerifySpec { suite, samples }),
                seed: Some(seed),
                ..serde_json::from_str(r#"{"mode": "verify"}"#).expect("static config")
            };
            let raw = serde_json::to_value(&config).expect("config serializes");
            report(&run_config(&config, raw, &RunOptions { jobs, out }))
        }
        Command::Plot { run } => match emit_plot_data(&run) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(Status::ConfigError.exit_code() as u8)
            }
        },
    }
}
