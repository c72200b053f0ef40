//! `pmm`: run protocol scenarios and check proof transcripts.
//!
//! Exit code 0 means the protocol ran to completion, whatever the verdicts.
//! Any nonzero code is a harness error such as an unreadable scenario.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use pmm_core::harness::{batch, run_with_seed, write_run_dir, Scenario};
use pmm_core::proofsys::{decode_bundle, verify};

#[derive(Parser)]
#[command(
    name = "pmm",
    version,
    about = "Verifiable mobility-data queries: scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario end to end and write a run directory.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's own seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "pmm-run")]
        out: PathBuf,
    },
    /// Run a scenario over many seeds and print detection statistics.
    Batch {
        scenario: PathBuf,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
    },
    /// Verify a proof bundle written by `pmm run`.
    VerifyTranscript { file: PathBuf },
}

fn load(path: &PathBuf) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PMM_LOG")).init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
        } => {
            let s = load(&scenario)?;
            let outcome = run_with_seed(&s, seed.unwrap_or(s.seed))?;
            write_run_dir(&outcome, &out).with_context(|| format!("writing {}", out.display()))?;
            print!("{}", outcome.report.to_text());
        }
        Command::Batch { scenario, seeds } => {
            let s = load(&scenario)?;
            print!("{}", batch(&s, seeds)?.to_text());
        }
        Command::VerifyTranscript { file } => {
            let bytes = fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let b = decode_bundle(&bytes)?;
            let ok = verify(&b.pp, &b.circuit, &b.z, &b.transcript);
            println!(
                "transcript backend={} query={} sigma={} accepted={ok}",
                b.pp.backend.name(),
                b.pp.query,
                b.pp.sigma
            );
        }
    }
    Ok(())
}
