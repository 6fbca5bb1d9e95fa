//! `vtln` command-line front end.

mod commands;
mod options;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::options::{BayesArgs, ClassicalArgs, HyperoptArgs, SynthArgs, VowelEvalArgs, WarpArgs};

/// Affine speaker normalization of formant and spectral data.
#[derive(Debug, Parser)]
#[command(name = "vtln", version, propagate_version = true)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pairwise least-squares or least-absolute-error fits and the
    /// database shift averaged from them.
    EstimateClassical(ClassicalArgs),
    /// Hyperparameter fit (unless supplied) followed by Gibbs sampling
    /// for one subject.
    EstimateBayes(BayesArgs),
    /// Maximize the integrated likelihood and export axis scans.
    Hyperopt(HyperoptArgs),
    /// Leave-one-speaker-out vowel recognition with and without
    /// normalization.
    VowelEval(VowelEvalArgs),
    /// Warp a sampled spectrum and resample it onto its own bins.
    Warp(WarpArgs),
    /// Generate a synthetic paired dataset or vowel corpus.
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::EstimateClassical(a) => commands::estimate_classical(a),
        Command::EstimateBayes(a) => commands::estimate_bayes(a),
        Command::Hyperopt(a) => commands::hyperopt(a),
        Command::VowelEval(a) => commands::vowel_eval(a),
        Command::Warp(a) => commands::warp(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
