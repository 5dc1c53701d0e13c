//! Instance files: JSON description of a source, a staged task model and
//! distortion matrices.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "alphabets": { "X": 4, "Y": ["a", "b"], "T": 2 },
//!   "source": [0.25, 0.25, 0.25, 0.25],
//!   "stages": [
//!     { "from": "X", "to": "Y", "table": [0, 0, 1, 1] },
//!     { "from": "Y", "to": "T", "table": [1, 0] }
//!   ],
//!   "cuts": ["Y"],
//!   "distortions": { "T": [[0, 1], [1, 0]] }
//! }
//! ```
//!
//! Alphabets are given by size or by a list of labels. The stages must chain
//! from `X` to `T`; every intermediate boundary named in `cuts` becomes a
//! valid cut. Distortion keys are `X`, `T` or a cut name.

use std::collections::BTreeMap;
use std::path::Path;

use rdm_core::{Alphabet, DeterministicMap, DistortionMatrix, FiniteDistribution, MachineRdInstance, TaskModel};
use rdm_core::{INPUT_BOUNDARY, TASK_BOUNDARY};
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    schema: u32,
    alphabets: BTreeMap<String, AlphabetSpec>,
    source: Vec<f64>,
    stages: Vec<StageSpec>,
    #[serde(default)]
    cuts: Vec<String>,
    distortions: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AlphabetSpec {
    Size(usize),
    Labels(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageSpec {
    from: String,
    to: String,
    table: Vec<usize>,
}

pub fn load_instance(path: &Path) -> Result<MachineRdInstance, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_instance(&text).map_err(|e| match e {
        CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_instance(text: &str) -> Result<MachineRdInstance, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Usage(format!("schema violation at `{path}`: {}", e.inner()))
    })?;
    build(file)
}

fn field(path: impl Into<String>, message: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("schema violation at `{}`: {message}", path.into()))
}

fn build(file: InstanceFile) -> Result<MachineRdInstance, CliError> {
    if file.schema != SCHEMA_VERSION {
        return Err(field("schema", format!("unsupported version {}, expected {SCHEMA_VERSION}", file.schema)));
    }
    let mut alphabets = BTreeMap::new();
    for (name, spec) in &file.alphabets {
        let alphabet = match spec {
            AlphabetSpec::Size(n) => Alphabet::new(*n),
            AlphabetSpec::Labels(labels) => Alphabet::with_labels(labels.clone()),
        }
        .map_err(|e| field(format!("alphabets.{name}"), e))?;
        alphabets.insert(name.clone(), alphabet);
    }
    let alphabet = |name: &str, path: String| {
        alphabets
            .get(name)
            .cloned()
            .ok_or_else(|| field(path, format!("unknown alphabet {name:?}")))
    };

    let x = alphabet(INPUT_BOUNDARY, "alphabets".into())?;
    alphabet(TASK_BOUNDARY, "alphabets".into())?;
    let source = FiniteDistribution::new(x, file.source).map_err(|e| field("source", e))?;

    if file.stages.is_empty() {
        return Err(field("stages", "at least one stage is required"));
    }
    let mut boundaries = vec![INPUT_BOUNDARY.to_string()];
    let mut stages = Vec::with_capacity(file.stages.len());
    for (k, stage) in file.stages.iter().enumerate() {
        let here = format!("stages[{k}]");
        if stage.from != boundaries[k] {
            return Err(field(
                format!("{here}.from"),
                format!("expected {:?} to continue the chain, found {:?}", boundaries[k], stage.from),
            ));
        }
        if boundaries.contains(&stage.to) {
            return Err(field(format!("{here}.to"), format!("boundary {:?} appears twice", stage.to)));
        }
        let input = alphabet(&stage.from, format!("{here}.from"))?;
        let output = alphabet(&stage.to, format!("{here}.to"))?;
        let map = DeterministicMap::new(input, output, stage.table.clone()).map_err(|e| field(format!("{here}.table"), e))?;
        stages.push(map);
        boundaries.push(stage.to.clone());
    }
    if boundaries.last().map(String::as_str) != Some(TASK_BOUNDARY) {
        return Err(field(
            format!("stages[{}].to", file.stages.len() - 1),
            format!("the last stage must end at {TASK_BOUNDARY:?}"),
        ));
    }

    let mut cuts = BTreeMap::new();
    for (k, name) in file.cuts.iter().enumerate() {
        let position = boundaries[1..boundaries.len() - 1]
            .iter()
            .position(|b| b == name)
            .ok_or_else(|| field(format!("cuts[{k}]"), format!("{name:?} is not an intermediate boundary")))?;
        cuts.insert(name.clone(), position + 1);
    }
    let model = TaskModel::new(stages, cuts.clone()).map_err(|e| field("stages", e))?;

    let mut distortions = BTreeMap::new();
    for (name, rows) in file.distortions {
        let here = format!("distortions.{name}");
        let position = match name.as_str() {
            INPUT_BOUNDARY => 0,
            TASK_BOUNDARY => model.depth(),
            cut => *cuts
                .get(cut)
                .ok_or_else(|| field(&here, format!("{cut:?} is neither X, T nor a declared cut")))?,
        };
        let a = model.alphabet_at(position).clone();
        let matrix = DistortionMatrix::new(a.clone(), a, rows).map_err(|e| field(&here, e))?;
        distortions.insert(name, matrix);
    }
    if !distortions.contains_key(TASK_BOUNDARY) {
        return Err(field("distortions", format!("a task distortion {TASK_BOUNDARY:?} is required")));
    }
    MachineRdInstance::new(source, model, distortions).map_err(|e| field("distortions", e))
}
