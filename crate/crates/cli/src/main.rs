use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kzlab::runner::{emit_artifacts, list_experiments, run_experiment, ExperimentConfig};
use kzlab::Error;

#[derive(Parser)]
#[command(name = "kzlab", version, about = "Randomized Kaczmarz experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration file
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the configuration)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Experiment seed (overrides the configuration)
        #[arg(long)]
        seed: Option<u64>,
        /// Also write every trial's trace under `trials/`
        #[arg(long)]
        keep_trials: bool,
    },
    /// List experiments with their default configurations
    List,
}

fn exit_code(err: &Error) -> u8 {
    if err.is_config() {
        2
    } else if err.is_io() {
        1
    } else {
        3
    }
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, keep_trials: bool) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.output = Some(out);
    }
    let report = run_experiment(&cfg)?;
    let dir = cfg.output_dir();
    let files = emit_artifacts(&report, &dir, keep_trials)?;
    println!("{} ({} trials, seed {})", cfg.experiment, cfg.trials, cfg.seed);
    let mut header = vec!["variant".to_string()];
    header.extend(report.summary.columns.iter().cloned());
    println!("{}", header.join("\t"));
    for row in &report.summary.rows {
        let cells: Vec<String> = row
            .values
            .iter()
            .map(|v| v.map_or_else(String::new, |v| format!("{v:.6e}")))
            .collect();
        println!("{}\t{}", row.variant, cells.join("\t"));
    }
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for (kind, defaults) in list_experiments() {
                println!("{kind}: {}", kind.description());
                println!("  defaults: {}", defaults.to_json());
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            seed,
            keep_trials,
        } => match run(config, out, seed, keep_trials) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
    }
}
