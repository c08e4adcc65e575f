use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mimo_sic::cli::{self, CliError, OUT_DIR_ENV};

#[derive(Parser)]
#[command(version, about = "MIMO DFE/THP transceiver design and BER simulation")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design one transceiver and write its matrices and MSEs.
    Design {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = OUT_DIR_ENV)]
        out: PathBuf,
    },
    /// Run a BER/MSE sweep and write ber.csv plus a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = OUT_DIR_ENV)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the solver invariants on random instances.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Perturb the feedback matrix so the Weyl-bound suite must fail.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Cmd::Design { config, out } => {
            let report = cli::cmd_design(&config, &out)?;
            print!("{}", report.to_text());
        }
        Cmd::Simulate { config, out, threads } => {
            let outcome = cli::cmd_simulate(&config, &out, threads)?;
            for e in &outcome.manifest.record_errors {
                eprintln!("warning: {e}");
            }
            println!(
                "wrote {} records to {}",
                outcome.records.len(),
                out.join("ber.csv").display()
            );
        }
        Cmd::Verify {
            seed,
            trials,
            inject_fault,
            out,
        } => {
            let report = cli::cmd_verify(seed, trials, inject_fault, out.as_deref())?;
            print!("{}", report.to_text());
            if !report.passed() {
                let failed: Vec<&str> = report
                    .suites
                    .iter()
                    .filter(|s| !s.passed())
                    .map(|s| s.name)
                    .collect();
                return Err(CliError::Verification(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
