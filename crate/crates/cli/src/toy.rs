use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rdm_core::task_appropriateness::save_lfs;
use rdm_core::toy_lab::{
    appropriateness_of, embed, optimal_one_bit_quantizer, quantizer_mse, sample_dataset, task_error, to_feature_set,
    QuantizerMethod, ToyClass, ToyPoint, ToyQuantizer, ToySpace,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{csv_text, ensure_dir, fmt_float, persist, to_json, write_atomic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// The published bins and representatives.
    Analytic,
    /// Two-means fitted to the sample.
    Lloyd,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Analytic)]
    pub method: MethodArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the input and layer sets as `input.lfs` and `layer.lfs`.
    #[arg(long)]
    pub export_lfs: bool,
    /// Skip the per-point `points.csv`.
    #[arg(long)]
    pub no_points: bool,
}

fn class_name(c: ToyClass) -> &'static str {
    match c {
        ToyClass::Square => "square",
        ToyClass::Circle => "circle",
    }
}

fn describe(q: &ToyQuantizer, data: &[ToyPoint]) -> Value {
    json!({
        "boundary": q.boundary,
        "representatives": q.representatives,
        "bin_classes": q.bin_classes().map(class_name),
        "mse": quantizer_mse(q, data),
        "task_error": task_error(q, data),
    })
}

pub fn run(args: &ToyArgs) -> Result<(), CliError> {
    if args.n < 4 {
        return Err(CliError::Usage(format!("--n must be at least 4, got {}", args.n)));
    }
    let data = sample_dataset(args.n, args.seed);
    let method = match args.method {
        MethodArg::Analytic => QuantizerMethod::Analytic,
        MethodArg::Lloyd => QuantizerMethod::Lloyd,
    };
    let fit = |space| optimal_one_bit_quantizer(space, &data, method, args.seed).map_err(|e| CliError::core("toy quantizer", e));
    let (qx, qy) = (fit(ToySpace::Input)?, fit(ToySpace::Layer)?);
    let rho = |space| appropriateness_of(&data, space).map_err(|e| CliError::core("toy appropriateness", e));
    let (rho_x, rho_y) = (rho(ToySpace::Input)?, rho(ToySpace::Layer)?);
    let (error_x, error_y) = (task_error(&qx, &data), task_error(&qy, &data));

    ensure_dir(&args.out)?;
    if !args.no_points {
        let rows = data.iter().map(|p| {
            let (y1, y2) = embed(p, ToySpace::Layer);
            vec![
                fmt_float(p.u),
                fmt_float(p.v),
                class_name(p.class).to_string(),
                fmt_float(y1),
                fmt_float(y2),
                qx.bin(p.u).to_string(),
                qy.bin(y1).to_string(),
            ]
        });
        write_atomic(&args.out, "points.csv", &csv_text(&["u", "v", "class", "y1", "y2", "bin_x", "bin_y"], rows)?)?;
    }

    let quantizers = json!({ "input": describe(&qx, &data), "layer": describe(&qy, &data) });
    write_atomic(&args.out, "quantizers.json", to_json(&quantizers)?.as_bytes())?;

    let mut meta = json!({
        "n": args.n,
        "seed": args.seed,
        "method": format!("{:?}", args.method).to_lowercase(),
        "error_x": error_x,
        "error_y": error_y,
        "rho_x": rho_x,
        "rho_y": rho_y,
        "mse_x": quantizer_mse(&qx, &data),
        "mse_y": quantizer_mse(&qy, &data),
    });
    if method == QuantizerMethod::Lloyd {
        let analytic_x = quantizer_mse(&ToyQuantizer::analytic(ToySpace::Input), &data);
        let analytic_y = quantizer_mse(&ToyQuantizer::analytic(ToySpace::Layer), &data);
        meta["analytic_mse_x"] = json!(analytic_x);
        meta["analytic_mse_y"] = json!(analytic_y);
        meta["mse_gap_x"] = json!(quantizer_mse(&qx, &data) - analytic_x);
        meta["mse_gap_y"] = json!(quantizer_mse(&qy, &data) - analytic_y);
    }
    write_atomic(&args.out, "meta.json", to_json(&meta)?.as_bytes())?;

    if args.export_lfs {
        for (space, name) in [(ToySpace::Input, "input.lfs"), (ToySpace::Layer, "layer.lfs")] {
            let set = to_feature_set(&data, space)
                .map_err(|e| CliError::core("toy export", e))?
                .with_metadata(format!("toy {name} n={} seed={}", args.n, args.seed));
            let tmp = tempfile::NamedTempFile::new_in(&args.out).map_err(|e| CliError::io(&args.out, e))?;
            save_lfs(tmp.path(), &set).map_err(|e| CliError::core(name, e))?;
            persist(tmp, &args.out.join(name))?;
        }
    }

    println!(
        "error_x={} error_y={} rho_x={} rho_y={}",
        fmt_float(error_x),
        fmt_float(error_y),
        fmt_float(rho_x),
        fmt_float(rho_y)
    );
    Ok(())
}
