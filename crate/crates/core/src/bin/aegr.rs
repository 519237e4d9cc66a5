use std::path::PathBuf;
use std::process::ExitCode;

use aegr::experiment::{cmd_plotdata, cmd_prepare, cmd_run, ExperimentConfig};
use clap::{Parser, Subcommand};

/// Autoencoder + LOF anomaly detection experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true, default_value = "experiment.json")]
    config: PathBuf,

    /// Worker threads for variant runs; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Run this single seed instead of the configured seed list.
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    /// Output directory, overriding `out_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode, split and normalize the dataset.
    Prepare,
    /// Run every configured variant and seed, then write the reports.
    Run,
    /// Write latent scatter and KDE curve data from a finished run.
    Plotdata,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c.with_overrides(cli.out.as_deref(), cli.seed_override),
        Err(e) => {
            log::error!("{}: {e}", cli.config.display());
            return ExitCode::FAILURE;
        }
    };
    let outcome = match cli.command {
        Command::Prepare => cmd_prepare(&cfg).map(|m| {
            println!("{m}");
            true
        }),
        Command::Run => {
            let jobs = cli
                .jobs
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            cmd_run(&cfg, jobs).map(|report| {
                print!("{}", report.to_markdown());
                !report.failed()
            })
        }
        Command::Plotdata => cmd_plotdata(&cfg).map(|s| {
            println!(
                "{} seed {}: {} points, {} density curves",
                s.variant,
                s.seed,
                s.points,
                s.curves.len()
            );
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("one or more variants failed; see report.md");
            ExitCode::FAILURE
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
