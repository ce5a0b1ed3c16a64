//! SFWM photon-pair simulation CLI: mode solving, phase-matching contours,
//! joint spectra, polarization-frequency joint probabilities, and
//! genetic-algorithm geometry fitting.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 numeric failure,
//! 4 physics failure.

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};
use commands::Ctx;
use config::RunConfig;
use sfwm_core::cache::DispersionCache;
use sfwm_core::Error;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "sfwm", version, about = "Photon-pair generation in birefringent PCF: simulation and inverse geometry fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct CommonArgs {
    /// TOML configuration file (defaults apply when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output].dir)
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Dispersion cache directory (default .sfwm-cache)
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Disable the on-disk dispersion cache
    #[arg(long)]
    no_cache: bool,
    /// Suppress progress reporting on stderr
    #[arg(long)]
    quiet: bool,
    /// Worker thread count (does not affect results); also honors the
    /// SFWM_WORKERS environment variable
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the dispersion tables for both polarization axes
    Modes {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Trace phase-matching contours for the requested processes
    Contours {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate per-process marginal spectra and the total JSI
    Spectra {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compute the polarization-projected joint probability P(theta, omega_i)
    Jointprob {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit the fiber geometry to measured peaks with the genetic algorithm
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Observations CSV (overrides [fit].observations)
        #[arg(long)]
        observations: Option<PathBuf>,
        /// GA random seed (overrides [fit].seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Run the brute-force grid oracle and append the comparison
        #[arg(long)]
        oracle: bool,
    },
    /// Re-run a recorded manifest, reproducing byte-identical outputs
    Replay {
        /// manifest.json of a previous run
        manifest: PathBuf,
        /// Output directory for the replayed run
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Verify outputs against the manifest hashes
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        no_cache: bool,
        #[arg(long)]
        quiet: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn workers_from_env() -> Option<usize> {
    std::env::var("SFWM_WORKERS").ok().and_then(|v| v.parse().ok())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Physics(_) => 4,
        _ => 3,
    }
}

fn build_ctx(common: &CommonArgs, seed: Option<u64>, observations: Option<PathBuf>, oracle: bool) -> Result<Ctx, Error> {
    let workers = common.workers.or_else(workers_from_env);
    if let Some(n) = workers {
        // worker count shapes scheduling only, never results
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut hashes = BTreeMap::new();
    let config = match &common.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            hashes.insert(
                "config".to_string(),
                manifest::sha256_file(path)?,
            );
            cfg
        }
        None => RunConfig::default(),
    };
    if let Some(obs) = &observations {
        hashes.insert("observations".to_string(), manifest::sha256_file(obs)?);
    }
    let out_dir = common
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let cache = if common.no_cache {
        DispersionCache::in_memory()
    } else {
        DispersionCache::on_disk(
            common
                .cache_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from(".sfwm-cache")),
        )
    };
    let quiet = common.quiet || config.output.quiet;
    Ok(Ctx {
        config,
        out_dir,
        cache,
        quiet,
        seed,
        workers,
        input_hashes: hashes,
        observations_path: observations,
        oracle,
    })
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Modes { common } => commands::cmd_modes(&build_ctx(&common, None, None, false)?),
        Command::Contours { common } => {
            commands::cmd_contours(&build_ctx(&common, None, None, false)?)
        }
        Command::Spectra { common } => {
            commands::cmd_spectra(&build_ctx(&common, None, None, false)?)
        }
        Command::Jointprob { common } => {
            commands::cmd_jointprob(&build_ctx(&common, None, None, false)?)
        }
        Command::Fit {
            common,
            observations,
            seed,
            oracle,
        } => commands::cmd_fit(&build_ctx(&common, seed, observations, oracle)?),
        Command::Replay {
            manifest,
            output_dir,
            verify,
            cache_dir,
            no_cache,
            quiet,
            workers,
        } => {
            if let Some(n) = workers.or_else(workers_from_env) {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let cache = if no_cache {
                DispersionCache::in_memory()
            } else {
                DispersionCache::on_disk(cache_dir.unwrap_or_else(|| PathBuf::from(".sfwm-cache")))
            };
            let out = output_dir.unwrap_or_else(|| PathBuf::from("replay-out"));
            commands::cmd_replay(&manifest, &out, verify, cache, quiet)
        }
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}
