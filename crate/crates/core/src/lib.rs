//! Rate-distortion theory for coding for machines.
//!
//! Finite-alphabet probability primitives, a Blahut-Arimoto solver, the
//! machine-oriented rate-distortion reductions and a randomized theorem
//! checker, plus the empirical tools that go with them: task-appropriateness
//! scores for labeled features, the circles-and-squares toy problem, and
//! Bjøntegaard-delta curve comparison.

pub mod bd_metrics;
pub mod error;
pub mod machine_rd;
pub mod probspace;
pub mod rd_solver;
pub mod task_appropriateness;
pub mod theorem_suite;
pub mod toy_lab;

pub use bd_metrics::{bd, bd_metric, bd_rate, BdMode, BdResult, Fit, RateMetricCurve};
pub use error::{Error, Result};
pub use machine_rd::{machine_rd, reduce, ApproachKind, CodingApproach, MachineRdInstance};
pub use probspace::{
    Alphabet, Channel, DeterministicMap, DistortionMatrix, FiniteDistribution, TaskModel, INPUT_BOUNDARY,
    TASK_BOUNDARY,
};
pub use rd_solver::{blahut_arimoto, brute_force_rd, rate_at, sweep, MatchedRate, RdCurve, RdPoint, RdSolverConfig};
pub use task_appropriateness::{compute_report, AppropriatenessReport, LabeledFeatureSet};
pub use theorem_suite::{InstanceSpec, TheoremId, Verdict};
