//! `scorecast` — deterministic experiment runner for article-score
//! prediction studies.
//!
//! Every command takes a JSON config plus a seed and writes a report bundle
//! to an output directory. Identical (config, seed) pairs produce
//! byte-identical bundles regardless of thread count.

mod config;
mod plot;
mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{load_run_config, CliError, CliResult, EXIT_CONFIG, EXIT_INTERNAL};

#[derive(Debug, Parser)]
#[command(
    name = "scorecast",
    version,
    about = "Deterministic score-prediction experiments over article corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the `seed` field in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the `out_dir` field in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel strategy iterations (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus (config = generator spec).
    Synth(CommonArgs),
    /// Run a full experiment: corpus → strategy → evaluation bundle.
    Run(CommonArgs),
    /// Report the terms most associated with each score class.
    Terms(CommonArgs),
    /// Report score agreement between duplicate submissions.
    Agreement(CommonArgs),
    /// Report how often same-journal article pairs share a score.
    Homogeneity(CommonArgs),
}

fn init_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::config("config", "--threads must be ≥ 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::internal("config", format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(args) => {
            init_threads(args.threads)?;
            run::cmd_synth(&args.config, args.seed, args.out)
        }
        Command::Run(args) => {
            init_threads(args.threads)?;
            let resolved = load_run_config(&args.config, args.seed, args.out)?;
            run::cmd_run(&resolved)
        }
        Command::Terms(args) => {
            init_threads(args.threads)?;
            let resolved = load_run_config(&args.config, args.seed, args.out)?;
            run::cmd_terms(&resolved)
        }
        Command::Agreement(args) => {
            init_threads(args.threads)?;
            let resolved = load_run_config(&args.config, args.seed, args.out)?;
            run::cmd_agreement(&resolved)
        }
        Command::Homogeneity(args) => {
            init_threads(args.threads)?;
            let resolved = load_run_config(&args.config, args.seed, args.out)?;
            run::cmd_homogeneity(&resolved)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; usage mistakes are config
            // errors.
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            let code = if (2..=4).contains(&e.code) { e.code } else { EXIT_INTERNAL };
            std::process::exit(code);
        }
    }
}
