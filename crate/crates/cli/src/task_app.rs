use std::path::PathBuf;

use clap::Args;
use rdm_core::task_appropriateness::{depth_sweep, load_feature_set};
use rdm_core::Error;
use serde_json::json;

use crate::error::CliError;
use crate::output::{csv_text, ensure_dir, fmt_float, to_json, write_atomic};

#[derive(Debug, Args)]
pub struct TaskAppArgs {
    /// Feature sets in depth order (LFS, or CSV with a `label` column first).
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    /// One name per input; defaults to the file stems.
    #[arg(long, num_args = 1..)]
    pub names: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

fn file_name_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn run(args: &TaskAppArgs) -> Result<(), CliError> {
    let names: Vec<String> = if args.names.is_empty() {
        args.inputs
            .iter()
            .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
            .collect()
    } else if args.names.len() == args.inputs.len() {
        args.names.clone()
    } else {
        return Err(CliError::Usage(format!(
            "{} names given for {} inputs",
            args.names.len(),
            args.inputs.len()
        )));
    };

    let mut sets = Vec::with_capacity(args.inputs.len());
    for (path, name) in args.inputs.iter().zip(&names) {
        let set = load_feature_set(path).map_err(|e| CliError::core(path.display().to_string(), e))?;
        sets.push((name.clone(), set));
    }
    let rows = depth_sweep(&sets).map_err(|e| match e {
        // Report the files, not the display names.
        Error::ClassCountMismatch {
            first,
            first_classes,
            second,
            second_classes,
        } => {
            let file = |n: &String| {
                names
                    .iter()
                    .position(|m| m == n)
                    .map_or_else(|| n.clone(), |k| args.inputs[k].display().to_string())
            };
            CliError::Usage(format!(
                "class count mismatch: {} has {first_classes} classes, {} has {second_classes}",
                file(&first),
                file(&second)
            ))
        }
        other => CliError::core("task appropriateness", other),
    })?;

    ensure_dir(&args.out)?;
    let table = rows.iter().map(|row| {
        vec![
            row.name.clone(),
            fmt_float(row.report.rho),
            row.monotone_vs_prev.map_or_else(String::new, |m| m.to_string()),
        ]
    });
    write_atomic(&args.out, "rho.csv", &csv_text(&["name", "rho", "monotone_vs_prev"], table)?)?;
    for (k, (row, path)) in rows.iter().zip(&args.inputs).enumerate() {
        let detail = json!({
            "name": row.name,
            "input": path.display().to_string(),
            "samples": sets[k].1.count(),
            "dimension": sets[k].1.dimension(),
            "monotone_vs_prev": row.monotone_vs_prev,
            "report": row.report,
        });
        write_atomic(&args.out, &format!("{k}-{}.json", file_name_safe(&row.name)), to_json(&detail)?.as_bytes())?;
        println!("{:<20} rho={}", row.name, fmt_float(row.report.rho));
    }
    Ok(())
}
