use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

mod config;
mod run;

use config::{defaults, ExperimentConfig, ScenarioKind};
use run::RunError;

const EXIT_INVALID: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

/// Monte-Carlo experiments with nearest-Kronecker-product subband adaptive
/// filters.
#[derive(Parser)]
#[command(name = "kronfilt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        file: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
    /// Print a scenario's built-in defaults as a complete config.
    ListDefaults { scenario: ScenarioKind },
}

const LEGEND: &str = "\
# rank = P (Kronecker terms), interval = k (update period), bands = N,
# bank_len = L, lambda = initial factor level, memory = B, order = A.";

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListDefaults { scenario } => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{LEGEND}\n{}", defaults(scenario).to_toml());
            ExitCode::SUCCESS
        }
        Command::Run {
            file,
            seed,
            trials,
            threads,
            out_dir,
        } => run_file(&file, seed, trials, threads, &out_dir),
    }
}

fn run_file(file: &Path, seed: Option<u64>, trials: Option<usize>, threads: Option<usize>, out_dir: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display())) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let mut cfg = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(errs) => {
            for e in errs.0 {
                eprintln!("error: {e}");
            }
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Err(errs) = cfg.validate() {
        for e in errs.0 {
            eprintln!("error: {e}");
        }
        return ExitCode::from(EXIT_INVALID);
    }
    match run::run(&cfg, out_dir, threads) {
        Ok(summary) => {
            println!("{} run {} -> {}", cfg.scenario.name(), summary["config_hash"].as_str().unwrap_or(""), out_dir.display());
            ExitCode::SUCCESS
        }
        Err(RunError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(RunError::AllDiverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DIVERGED)
        }
        Err(RunError::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
