//! `markov-noise` command-line front end.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "markov-noise", version, about = "Noise sensitivity and stability diagnostics for reversible Markov chains")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "MNOISE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    Pi,
    Counting,
}

#[derive(Args)]
pub struct ChainArg {
    /// Chain spec file (family reference or explicit generator).
    #[arg(long)]
    pub chain: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum, Fourier profile, curves and band masses for one function.
    Analyze(commands::AnalyzeArgs),
    /// Per-n diagnostics along a chain family.
    Sweep(commands::SweepArgs),
    /// Bottleneck ratio minimizer.
    Bottleneck(commands::BottleneckArgs),
    /// Threshold sweep, band amplitudes and the low-band probe.
    Stability(commands::StabilityArgs),
    /// (L, delta)-localization of a vector or band.
    Localize(commands::LocalizeArgs),
    /// Monte Carlo estimates next to their spectral values.
    Simulate(commands::SimulateArgs),
    /// Write a chain in explicit form.
    Export(commands::ExportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(CliError::new("InvalidParams", e.to_string()).with("threads", n));
        }
    }
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Bottleneck(a) => commands::bottleneck(&a),
        Command::Stability(a) => commands::stability(&a),
        Command::Localize(a) => commands::localize(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Export(a) => commands::export(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&e).unwrap_or_else(|_| e.to_string()));
    ExitCode::from(2)
}
