use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdense_core::config::Config;
use kdense_core::runner;

/// Numerical checks of K-density and the curvature identities around it.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in the config, then its reports.
    Verify(Opts),
    /// Run only the large-r asymptotic experiments.
    Asymptotic(Opts),
    /// Run only the Petty-ratio experiments.
    Petty(Opts),
    /// Run only the K-density spread experiments.
    Kdense(Opts),
    /// Run only the identity checks.
    Identities(Opts),
}

#[derive(Args)]
struct Opts {
    config: PathBuf,
    /// Output directory (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// QMC points per replicate (overrides `qmc.points`).
    #[arg(long)]
    samples: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (opts, filter) = match &cli.command {
        Command::Verify(o) => (o, None),
        Command::Asymptotic(o) => (o, Some("asymptotic")),
        Command::Petty(o) => (o, Some("petty")),
        Command::Kdense(o) => (o, Some("kdense")),
        Command::Identities(o) => (o, Some("identities")),
    };
    if let Ok(w) = std::env::var("KDENSE_WORKERS") {
        match w.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("thread pool is configured once");
            }
            _ => {
                eprintln!("config error at `KDENSE_WORKERS`: expected a positive integer, got {w:?}");
                return ExitCode::from(1);
            }
        }
    }
    let mut config = match Config::from_file(&opts.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    if let Some(out) = &opts.out {
        config.output = out.clone();
    }
    if let Some(seed) = opts.seed {
        config.seed = seed;
        config.qmc.seed = seed;
    }
    if let Some(samples) = opts.samples {
        if samples == 0 {
            eprintln!("config error at `--samples`: expected a positive integer");
            return ExitCode::from(1);
        }
        config.qmc.points = samples;
    }
    let outcome = match runner::run(&config, filter) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("config error at `output`: {e}");
            return ExitCode::from(1);
        }
    };
    for row in &outcome.summary {
        println!(
            "{:<24} {:<36} {:<16} {:<26} {:.3e}",
            row.experiment, row.identity, row.body, row.verdict, row.measured
        );
    }
    for i in outcome.unexpected() {
        eprintln!("{} / {}: {}", i.experiment, i.body, i.error);
    }
    eprintln!("wrote {} files to {}", outcome.files.len(), config.output.display());
    ExitCode::from(outcome.exit_code() as u8)
}
