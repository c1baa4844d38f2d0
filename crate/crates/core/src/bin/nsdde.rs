use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nsdde::harness::{parse_config_with_overrides, run_experiment, ExperimentConfig};
use nsdde::registry::describe_models;
use nsdde::Error;

#[derive(Parser)]
#[command(
    name = "nsdde",
    version,
    about = "EM convergence experiments for neutral delay SDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Replaces monte_carlo.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces monte_carlo.workers.
        #[arg(long, env = "NSDDE_WORKERS")]
        workers: Option<usize>,
        /// key.path=value edits applied before validation.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the registered models and their parameters.
    ListModels,
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(path: &PathBuf, overrides: &[String]) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        context: path.clone(),
        source: e,
    })?;
    parse_config_with_overrides(&text, overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListModels => {
            print!("{}", describe_models());
            ExitCode::SUCCESS
        }
        Command::Validate { config, overrides } => match load(&config, &overrides) {
            Ok(cfg) => {
                println!(
                    "ok: model {} with {} ladder steps, reference_m {}",
                    cfg.model.id,
                    cfg.grid.m.len(),
                    cfg.reference_m()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            out_dir,
            seed,
            workers,
            mut overrides,
        } => {
            if let Some(s) = seed {
                overrides.push(format!("monte_carlo.seed={s}"));
            }
            if let Some(w) = workers {
                overrides.push(format!("monte_carlo.workers={w}"));
            }
            let outcome = load(&config, &overrides).and_then(|cfg| run_experiment(&cfg, &out_dir));
            match outcome {
                Ok(run) => {
                    print!("{}", nsdde::harness::summary_text(&run.summary, &run.study));
                    if run.gates_passed() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("acceptance gate failed");
                        ExitCode::from(1)
                    }
                }
                Err(e @ Error::ExplosionBudgetExceeded { .. }) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
