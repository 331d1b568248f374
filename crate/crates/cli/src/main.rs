use std::process::ExitCode;

use adm_cli::commands::{run_adm, run_decode, run_eval, run_synth, run_verify};
use adm_cli::commands::{AdmArgs, DecodeArgs, EvalArgs, SynthArgs, VerifyArgs};
use clap::{Parser, Subcommand};

/// Point-supervised pseudo-label generation, decoding and evaluation.
#[derive(Debug, Parser)]
#[command(name = "adm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset of probability signals.
    Synth(SynthArgs),
    /// Fit pseudo-labels around annotated points.
    Adm(AdmArgs),
    /// Decode proposals from probability signals.
    Decode(DecodeArgs),
    /// Score proposals or pseudo-labels against ground truth.
    Eval(EvalArgs),
    /// Run a verification suite and print its JSON report.
    Verify(VerifyArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ADM_LOG_LEVEL", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => run_synth(a).map(|_| true),
        Command::Adm(a) => run_adm(a).map(|_| true),
        Command::Decode(a) => run_decode(a).map(|_| true),
        Command::Eval(a) => run_eval(a).map(|_| true),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
