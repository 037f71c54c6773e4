use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use noma_core::harness::{run_config_file, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "noma-games", version, about = "NOMA resource-allocation game experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and emit CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// First seed of the replication range (replaces any seed list in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path (defaults to the config's output_path, else stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the brute-force oracles and add their columns.
        #[arg(long)]
        oracle: bool,
    },
    /// Parse and validate a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            oracle,
        } => run_config_file(&config, seed, out.as_deref(), oracle).map(|target| {
            if let Some(p) = target {
                eprintln!("wrote {}", p.display());
            }
        }),
        Command::Validate { config } => ExperimentConfig::load(&config)
            .and_then(|c| c.validate().map(|_| c))
            .map(|c| eprintln!("{}: ok ({} experiment)", config.display(), c.experiment.name())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &HarnessError) -> u8 {
    e.exit_code() as u8
}
