use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use regensim_cli::{describe, run, RunOptions};

#[derive(Parser)]
#[command(name = "regensim", version, about = "Regenerative simulation and output-analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the replicate pool.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the inputs, oracle and pass criteria of an experiment kind.
    Describe { kind: String },
    /// Print the tool version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, threads, out } => match run(&config, &RunOptions { seed, threads, out }) {
            Ok((manifest, dir)) => {
                for c in &manifest.checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                println!("manifest: {}", dir.join("manifest.json").display());
                if manifest.passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
        Command::Describe { kind } => match describe(&kind) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Version => {
            println!("regensim {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}

fn fail(e: regensim_cli::CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
