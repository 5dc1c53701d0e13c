use std::path::PathBuf;

use clap::Args;
use rdm_core::theorem_suite::verify_default;
use rdm_core::{RdSolverConfig, TheoremId};

use crate::error::{CliError, EXIT_OK, EXIT_VERIFICATION};
use crate::output::{ensure_dir, fmt_float, to_json, write_atomic};

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Theorem id, or `all`.
    #[arg(long, default_value = "all")]
    pub theorem: String,
    /// Number of seeded instances per theorem.
    #[arg(long, default_value_t = 50)]
    pub seeds: usize,
    /// First seed; instances use seeds `seed..seed + seeds`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distortion levels per instance.
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Pass threshold for the equality checks (bits). Tolerance 0 turns
    /// solver round-off into failures.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn theorems(id: &str) -> Result<Vec<TheoremId>, CliError> {
    if id == "all" {
        return Ok(TheoremId::ALL.to_vec());
    }
    id.parse::<TheoremId>()
        .map(|t| vec![t])
        .map_err(|e| CliError::Usage(format!("{e} (or \"all\")")))
}

pub fn run(args: &VerifyArgs, config: &RdSolverConfig) -> Result<u8, CliError> {
    let selected = theorems(&args.theorem)?;
    if args.seeds == 0 || args.levels == 0 {
        return Err(CliError::Usage("--seeds and --levels must be positive".into()));
    }
    if let Some(tol) = args.tol {
        if !(tol >= 0.0) {
            return Err(CliError::Usage(format!("--tol must be non-negative, got {tol}")));
        }
    }
    ensure_dir(&args.out)?;

    let mut status = EXIT_OK;
    for theorem in selected {
        let verdict = verify_default(theorem, args.seed, args.seeds, args.levels, args.tol, config);
        write_atomic(&args.out, &format!("{}.json", theorem.id()), to_json(&verdict)?.as_bytes())?;
        println!(
            "{:<24} {} max_violation={} tolerance={} instances={}",
            verdict.theorem,
            if verdict.pass { "PASS" } else { "FAIL" },
            fmt_float(verdict.max_violation),
            fmt_float(verdict.tolerance),
            verdict.instances_run,
        );
        for e in &verdict.errors {
            log::warn!("{} seed {}: {}", verdict.theorem, e.seed, e.message);
        }
        if !verdict.pass {
            status = EXIT_VERIFICATION;
        }
    }
    Ok(status)
}
