//! `rdm`: rate-distortion sweeps, theorem verification, task-appropriateness
//! reports, the circles-and-squares toy, and Bjøntegaard deltas.

mod bd;
mod error;
mod instance;
mod output;
mod rd_curve;
mod task_app;
mod toy;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdm_core::RdSolverConfig;

use crate::error::{CliError, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "rdm", version, about = "Rate-distortion laboratory for coding for machines")]
struct Cli {
    /// JSON file overriding solver settings (`slope_grid`, `max_iterations`,
    /// `convergence_tol`, `support_prune_tol`, `match_tol`).
    #[arg(long, global = true)]
    solver_config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the rate-distortion curve of one coding approach.
    RdCurve(rd_curve::RdCurveArgs),
    /// Check the theorem suite on seeded random instances.
    Verify(verify::VerifyArgs),
    /// Task-appropriateness scores for a sequence of feature sets.
    TaskApp(task_app::TaskAppArgs),
    /// Sample and quantize the circles-and-squares toy problem.
    Toy(toy::ToyArgs),
    /// Bjøntegaard delta between two rate-metric curves.
    Bd(bd::BdArgs),
}

fn solver_config(path: Option<&Path>) -> Result<RdSolverConfig, CliError> {
    let Some(path) = path else {
        return Ok(RdSolverConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let config: RdSolverConfig = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| CliError::Usage(format!("{}: `{}`: {}", path.display(), e.path(), e.inner())))?;
    config
        .validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(config)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("RDM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("RDM_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    configure_threads()?;
    let config = || solver_config(cli.solver_config.as_deref());
    match &cli.command {
        Command::RdCurve(args) => rd_curve::run(args, &config()?).map(|()| EXIT_OK),
        Command::Verify(args) => verify::run(args, &config()?),
        Command::TaskApp(args) => task_app::run(args).map(|()| EXIT_OK),
        Command::Toy(args) => toy::run(args).map(|()| EXIT_OK),
        Command::Bd(args) => bd::run(args).map(|()| EXIT_OK),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rdm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
