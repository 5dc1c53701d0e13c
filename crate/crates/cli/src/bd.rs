use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rdm_core::bd_metrics::load_curve;
use rdm_core::{bd, BdMode, Fit};

use crate::error::CliError;
use crate::output::to_json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rate,
    Metric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitArg {
    Cubic,
    Pchip,
}

#[derive(Debug, Args)]
pub struct BdArgs {
    #[arg(long)]
    pub anchor: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Rate)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = FitArg::Cubic)]
    pub fit: FitArg,
    #[arg(long, default_value = "rate")]
    pub rate_column: String,
    #[arg(long, default_value = "metric")]
    pub metric_column: String,
}

pub fn run(args: &BdArgs) -> Result<(), CliError> {
    let load = |path: &PathBuf| {
        load_curve(path, &args.rate_column, &args.metric_column).map_err(|e| CliError::core(path.display().to_string(), e))
    };
    let (anchor, test) = (load(&args.anchor)?, load(&args.test)?);
    let mode = match args.mode {
        ModeArg::Rate => BdMode::Rate,
        ModeArg::Metric => BdMode::Metric,
    };
    let fit = match args.fit {
        FitArg::Cubic => Fit::Cubic,
        FitArg::Pchip => Fit::Pchip,
    };
    let result = bd(&anchor, &test, mode, fit).map_err(|e| CliError::core("bd", e))?;
    print!("{}", to_json(&result)?);
    Ok(())
}
