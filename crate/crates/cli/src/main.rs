//! `rbmortar`: offline construction, online queries and validation sweeps
//! of reduced-basis models for orthotropic multi-patch eigenproblems.
//!
//! Exit codes: 0 on success, 2 on inadmissible input, 1 on any other error.
//! `RBMORTAR_THREADS` sets the size of the worker pool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use rbmortar_core::workbench::{cmd_offline, cmd_online, cmd_validate, read_samples, StudyConfig};
use rbmortar_core::{build_test_geometry, Error, TestGeometry};

const THREADS_VAR: &str = "RBMORTAR_THREADS";

#[derive(Parser)]
#[command(name = "rbmortar", version, about = "Reduced-basis mortar eigenvalue studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble, initialize by POD, run the greedy and write the model directory.
    Offline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reduced eigenvalues and error estimates at one or more parameters.
    Online {
        #[arg(long)]
        model: PathBuf,
        /// JSON file with one parameter object or an array of them.
        #[arg(long)]
        mu: PathBuf,
        /// Density overriding the one in the parameter file.
        #[arg(long)]
        rho: Option<f64>,
        /// Number of eigenpairs; defaults to the K of the offline run.
        #[arg(long)]
        k: Option<usize>,
        /// Include eigenvectors in constrained coordinates.
        #[arg(long)]
        eigenvectors: bool,
    },
    /// Mean errors of the nested reduced models against detailed solves.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated basis sizes; defaults to the greedy iterates.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Write a shipped geometry as JSON.
    Geometry {
        name: TestGeometry,
        #[arg(long)]
        output: PathBuf,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("{THREADS_VAR} must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> rbmortar_core::Result<()> {
    match cli.command {
        Command::Offline { config } => {
            let cfg = StudyConfig::load(&config)?;
            let summary = cmd_offline(&cfg)?;
            info!("offline run finished in {:.1} s", summary.seconds);
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Online {
            model,
            mu,
            rho,
            k,
            eigenvectors,
        } => {
            let samples = read_samples(&mu)?;
            let report = cmd_online(&model, &samples, k, rho, eigenvectors)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Validate {
            model,
            samples,
            seed,
            sizes,
        } => {
            let report = cmd_validate(&model, samples, seed, sizes.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Geometry { name, output } => build_test_geometry(name)?.save(&output)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Inadmissible(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
