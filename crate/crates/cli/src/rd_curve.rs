use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rdm_core::{machine_rd, CodingApproach, RdSolverConfig, TASK_BOUNDARY};
use serde_json::json;

use crate::error::CliError;
use crate::instance::load_instance;
use crate::output::{csv_text, ensure_dir, fmt_float, json_float, to_json, write_atomic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ApproachArg {
    /// Encode the input, run the whole model on the reconstruction.
    Full,
    /// Run the model up to the cut, encode the intermediate tensor.
    Split,
    /// Encode the input, decode straight into the cut tensor.
    Direct,
}

#[derive(Debug, Args)]
pub struct RdCurveArgs {
    /// Instance description (JSON, schema 1).
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub approach: ApproachArg,
    /// Boundary whose tensor is reconstructed; required for split and direct.
    #[arg(long)]
    pub cut: Option<String>,
    /// Boundary at which distortion is measured.
    #[arg(long, default_value = TASK_BOUNDARY)]
    pub target: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn approach(args: &RdCurveArgs) -> Result<CodingApproach, CliError> {
    let cut = || {
        args.cut
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("--approach {:?} needs --cut", args.approach)))
    };
    Ok(match args.approach {
        ApproachArg::Full => CodingApproach {
            cut: args.cut.clone(),
            ..CodingApproach::full_input(&args.target)
        },
        ApproachArg::Split => CodingApproach::model_split(cut()?, &args.target),
        ApproachArg::Direct => CodingApproach::direct(cut()?, &args.target),
    })
}

pub fn run(args: &RdCurveArgs, config: &RdSolverConfig) -> Result<(), CliError> {
    let instance = load_instance(&args.instance)?;
    let approach = approach(args)?;
    approach
        .positions(instance.model())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    instance
        .distortion_at(&approach.target)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let result = machine_rd(&instance, &approach, config).map_err(|e| CliError::core(approach.label(), e))?;
    write_outputs(&args.out, &args.instance, &result, config)?;
    println!("{}: curve with {} points written to {}", approach.label(), result.curve.len(), args.out.display());
    Ok(())
}

fn write_outputs(
    out: &Path,
    instance_path: &Path,
    result: &rdm_core::machine_rd::MachineCurve,
    config: &RdSolverConfig,
) -> Result<(), CliError> {
    ensure_dir(out)?;
    let rows = result
        .curve
        .points
        .iter()
        .map(|p| vec![fmt_float(p.slope), fmt_float(p.rate), fmt_float(p.distortion)]);
    write_atomic(out, "curve.csv", &csv_text(&["slope", "rate_bits", "distortion"], rows)?)?;

    let reduction = &result.reduction;
    let approach = &reduction.approach;
    let meta = json!({
        "instance": instance_path.display().to_string(),
        "approach": approach.label(),
        "kind": format!("{:?}", approach.kind),
        "cut": approach.cut,
        "target": approach.target,
        "reduction": {
            "source": reduction.source.mass(),
            "distortion": reduction.distortion.to_rows(),
        },
        "points": result.curve.len(),
        "max_duality_gap": json_float(result.curve.points.iter().map(|p| p.gap).fold(0.0, f64::max)),
        "solver": config,
    });
    write_atomic(out, "meta.json", to_json(&meta)?.as_bytes())?;
    Ok(())
}
