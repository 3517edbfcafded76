use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cstream_harness::validate::{run_validation, Fault, ValidateOptions};
use cstream_harness::{run_config_file, run_sweep_file, WrittenReport};

#[derive(Parser)]
#[command(name = "cstream", version, about = "Fabric simulation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config (sweeps included).
    Run { config: PathBuf },
    /// Run a sweep config.
    Sweep { config: PathBuf },
    /// Run the oracle suite and print one line per property.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        corpus_size: usize,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Print the tool version.
    Version,
}

fn print_written(w: &WrittenReport) {
    for p in [&w.csv, &w.sidecar].into_iter().flatten() {
        eprintln!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config } => run_config_file(&config).map(|w| print_written(&w)),
        Command::Sweep { config } => run_sweep_file(&config).map(|w| print_written(&w)),
        Command::Validate { seed, corpus_size, inject_fault } => {
            if corpus_size == 0 {
                eprintln!("config error: `--corpus-size` must be >= 1");
                return ExitCode::from(2);
            }
            let summary = run_validation(&ValidateOptions { seed, corpus_size, fault: inject_fault });
            for p in &summary.properties {
                let status = if p.passed() { "PASS" } else { "FAIL" };
                println!("{status} {} ({} checks, {} failures)", p.name, p.checks, p.failures);
                for d in &p.details {
                    println!("     {d}");
                }
            }
            return if summary.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
        Command::Version => {
            println!("cstream {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
