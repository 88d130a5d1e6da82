//! spectra-forge: config-driven batch driver for the torus spectral
//! experiments. Parses a TOML experiment config, runs the requested
//! pipeline, and writes CSV artifacts with self-describing headers.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::Config;
use output::config_hash;

#[derive(Parser, Debug)]
#[command(
    name = "spectra-forge",
    about = "Spectral-coefficient experiments for Dirac operators on flat tori",
    after_help = "Environment: RAYON_NUM_THREADS overrides the worker-thread count."
)]
struct Cli {
    /// Experiment name (see --list).
    experiment: Option<String>,

    /// TOML config path; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for CSV artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Override the dimension (handy for clifford-check).
    #[arg(long)]
    d: Option<usize>,

    /// Print the experiment catalog and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        println!("available experiments:");
        for (name, desc) in experiments::CATALOG {
            println!("  {name:<14} {desc}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(experiment) = cli.experiment.clone() else {
        eprintln!("error: no experiment given (try --list)");
        return ExitCode::from(2);
    };

    let mut cfg = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match Config::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            },
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(d) = cli.d {
        cfg.dimension = d;
    }
    cfg.experiment.name = experiment.clone();

    // resource gate before any allocation
    if cfg.spectral.method == "galerkin" {
        let rank = 2usize.pow((cfg.dimension / 2) as u32);
        let n = (2 * cfg.spectral.k_basis as usize + 1).pow(cfg.dimension as u32) * rank;
        if n > cfg.spectral.size_limit {
            eprintln!(
                "error: galerkin problem of size {n} exceeds the configured limit {}",
                cfg.spectral.size_limit
            );
            return ExitCode::from(2);
        }
    }

    let canonical = cfg.to_toml();
    let hash = config_hash(&canonical);
    match experiments::run(&experiment, &cfg) {
        Ok(outcome) => {
            for file in &outcome.files {
                match file.write_to(&cli.out, &experiment, &hash, cfg.seed) {
                    Ok(path) => println!("wrote {}", path.display()),
                    Err(e) => {
                        eprintln!("error writing {}: {e}", file.name);
                        return ExitCode::from(2);
                    }
                }
            }
            let failed: Vec<_> = outcome.checks.iter().filter(|c| !c.pass).collect();
            if failed.is_empty() {
                if !outcome.checks.is_empty() {
                    println!("all {} checks passed", outcome.checks.len());
                }
                ExitCode::SUCCESS
            } else {
                for c in &failed {
                    eprintln!(
                        "FAIL {}: value {:.6e}, reference {:.6e}, tolerance {:.2e}",
                        c.name, c.value, c.reference, c.tolerance
                    );
                }
                eprintln!("{} of {} checks failed", failed.len(), outcome.checks.len());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
