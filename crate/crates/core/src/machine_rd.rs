//! Machine-oriented rate-distortion functions.
//!
//! Each coding approach (full-input, model splitting, direct) together with a
//! cut point and a distortion target reduces to an ordinary
//! `(source, distortion matrix)` pair. Writing `c` for the cut boundary, `t`
//! for the target boundary and `d_t` for the target distortion:
//!
//! | approach    | source        | reproduction | `d(a, b)`                         |
//! |-------------|---------------|--------------|-----------------------------------|
//! | full input  | `p_X`         | `X`          | `d_t(f_{0→t}(a), f_{0→t}(b))`     |
//! | model split | `p_X ∘ g⁻¹`   | cut `c`      | `d_t(f_{c→t}(a), f_{c→t}(b))`     |
//! | direct      | `p_X`         | cut `c`      | `d_t(f_{0→t}(a), f_{c→t}(b))`     |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probspace::{
    expected_distortion, lift_representatives, merge_reproduction_letters, pushforward, Channel, DeterministicMap,
    DistortionMatrix, FiniteDistribution, TaskModel, INPUT_BOUNDARY, TASK_BOUNDARY,
};
use crate::rd_solver::{rate_at, sweep, MatchedRate, RdCurve, RdSolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproachKind {
    FullInput,
    ModelSplit,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingApproach {
    pub kind: ApproachKind,
    pub cut: Option<String>,
    /// Boundary at which distortion is measured.
    pub target: String,
}

impl CodingApproach {
    pub fn full_input(target: &str) -> Self {
        Self {
            kind: ApproachKind::FullInput,
            cut: None,
            target: target.to_string(),
        }
    }

    pub fn model_split(cut: &str, target: &str) -> Self {
        Self {
            kind: ApproachKind::ModelSplit,
            cut: Some(cut.to_string()),
            target: target.to_string(),
        }
    }

    pub fn direct(cut: &str, target: &str) -> Self {
        Self {
            kind: ApproachKind::Direct,
            cut: Some(cut.to_string()),
            target: target.to_string(),
        }
    }

    /// Same approach with the distortion measured elsewhere.
    pub fn with_target(&self, target: &str) -> Self {
        Self {
            target: target.to_string(),
            ..self.clone()
        }
    }

    /// Resolve `(cut position, target position)` against a model.
    pub fn positions(&self, model: &TaskModel) -> Result<(usize, usize)> {
        let cut = match (self.kind, &self.cut) {
            (ApproachKind::FullInput, None) => 0,
            (ApproachKind::FullInput, Some(c)) if c == INPUT_BOUNDARY => 0,
            (ApproachKind::FullInput, Some(c)) => {
                return Err(Error::Approach(format!("full-input coding takes no cut, got {c:?}")));
            }
            (_, None) => return Err(Error::Approach(format!("{:?} requires a cut", self.kind))),
            (_, Some(c)) => model
                .boundary(c)
                .map_err(|_| Error::Approach(format!("unknown cut {c:?}")))?,
        };
        let target = model
            .boundary(&self.target)
            .map_err(|_| Error::Approach(format!("unknown distortion target {:?}", self.target)))?;
        if target < cut {
            return Err(Error::Approach(format!(
                "distortion target {:?} lies before the cut {:?}",
                self.target,
                self.cut.as_deref().unwrap_or(INPUT_BOUNDARY)
            )));
        }
        Ok((cut, target))
    }

    /// Short label such as `split@Y1->T`.
    pub fn label(&self) -> String {
        match self.kind {
            ApproachKind::FullInput => format!("full->{}", self.target),
            ApproachKind::ModelSplit => format!("split@{}->{}", self.cut.as_deref().unwrap_or("?"), self.target),
            ApproachKind::Direct => format!("direct@{}->{}", self.cut.as_deref().unwrap_or("?"), self.target),
        }
    }
}

/// A source law, a task model, and distortion measures at named boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct MachineRdInstance {
    source: FiniteDistribution,
    model: TaskModel,
    distortions: BTreeMap<String, DistortionMatrix>,
}

impl MachineRdInstance {
    /// `distortions` must contain the task distortion under key `"T"`; other
    /// keys name the boundary they measure (`"X"` or a cut).
    pub fn new(
        source: FiniteDistribution,
        model: TaskModel,
        distortions: BTreeMap<String, DistortionMatrix>,
    ) -> Result<Self> {
        if source.len() != model.input_alphabet().size() {
            return Err(Error::AlphabetMismatch {
                context: "instance source",
                expected: model.input_alphabet().size(),
                found: source.len(),
            });
        }
        if !distortions.contains_key(TASK_BOUNDARY) {
            return Err(Error::MissingDistortion(TASK_BOUNDARY.into()));
        }
        for (name, d) in &distortions {
            let size = model.alphabet_at(model.boundary(name)?).size();
            if d.row_alphabet().size() != size || d.col_alphabet().size() != size {
                return Err(Error::Distortion(format!(
                    "distortion at {name:?} is {}x{}, expected {size}x{size}",
                    d.row_alphabet().size(),
                    d.col_alphabet().size()
                )));
            }
        }
        Ok(Self {
            source,
            model,
            distortions,
        })
    }

    pub fn source(&self) -> &FiniteDistribution {
        &self.source
    }

    pub fn model(&self) -> &TaskModel {
        &self.model
    }

    pub fn distortions(&self) -> &BTreeMap<String, DistortionMatrix> {
        &self.distortions
    }

    pub fn distortion_at(&self, target: &str) -> Result<&DistortionMatrix> {
        self.distortions
            .get(target)
            .ok_or_else(|| Error::MissingDistortion(target.to_string()))
    }

    pub fn task_distortion(&self) -> &DistortionMatrix {
        &self.distortions[TASK_BOUNDARY]
    }

    /// Which task outputs the full model reaches.
    pub fn task_image(&self) -> Vec<bool> {
        self.model.full_map().image()
    }
}

/// An approach reduced to a classical rate-distortion problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub approach: CodingApproach,
    pub source: FiniteDistribution,
    pub distortion: DistortionMatrix,
}

pub fn reduce(instance: &MachineRdInstance, approach: &CodingApproach) -> Result<Reduction> {
    let model = instance.model();
    let (cut, target) = approach.positions(model)?;
    let d_target = instance.distortion_at(&approach.target)?;

    let reproduction_map = model.map_between(cut, target)?;
    let (source, source_map) = match approach.kind {
        ApproachKind::ModelSplit => (
            pushforward(instance.source(), &model.map_between(0, cut)?)?,
            reproduction_map.clone(),
        ),
        ApproachKind::FullInput | ApproachKind::Direct => (instance.source().clone(), model.map_between(0, target)?),
    };
    let distortion = DistortionMatrix::from_fn(
        source.alphabet().clone(),
        model.alphabet_at(cut).clone(),
        |a, b| d_target.get(source_map.apply(a), reproduction_map.apply(b)),
    )?;
    Ok(Reduction {
        approach: approach.clone(),
        source,
        distortion,
    })
}

/// A swept curve tagged with the approach that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct MachineCurve {
    pub reduction: Reduction,
    pub curve: RdCurve,
}

pub fn machine_rd(
    instance: &MachineRdInstance,
    approach: &CodingApproach,
    config: &RdSolverConfig,
) -> Result<MachineCurve> {
    let reduction = reduce(instance, approach)?;
    let curve = sweep(&reduction.source, &reduction.distortion, config)?;
    Ok(MachineCurve { reduction, curve })
}

/// The approach's rate-distortion function at one distortion level.
pub fn machine_rate_at(
    instance: &MachineRdInstance,
    approach: &CodingApproach,
    distortion: f64,
    config: &RdSolverConfig,
) -> Result<MatchedRate> {
    let reduction = reduce(instance, approach)?;
    rate_at(&reduction.source, &reduction.distortion, distortion, config)
}

/// Expected distortion at `target` of a channel designed for `approach`.
pub fn induced_distortion(
    instance: &MachineRdInstance,
    approach: &CodingApproach,
    channel: &Channel,
    target: &str,
) -> Result<f64> {
    let reduction = reduce(instance, &approach.with_target(target))?;
    expected_distortion(&reduction.source, channel, &reduction.distortion)
}

/// Outcome of optimizing for a proxy distortion and then measuring the task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupervisedGap {
    /// The proxy distortion level the unsupervised channel was designed for.
    pub proxy_distortion: f64,
    pub rate_unsupervised: f64,
    pub induced_task_distortion: f64,
    pub rate_supervised: f64,
    pub gap: f64,
}

/// Compare the input-distortion-optimal channel at `input_cap` against the
/// task-optimal rate at the task distortion that channel induces.
pub fn supervised_gap(instance: &MachineRdInstance, input_cap: f64, config: &RdSolverConfig) -> Result<SupervisedGap> {
    proxy_gap(
        instance,
        &CodingApproach::full_input(INPUT_BOUNDARY),
        input_cap,
        config,
    )
}

/// [`supervised_gap`] for an arbitrary proxy: `proxy` fixes the cut and the
/// boundary whose distortion is optimized; the task distortion is then
/// induced at `T` and re-optimized with the same cut.
pub fn proxy_gap(
    instance: &MachineRdInstance,
    proxy: &CodingApproach,
    proxy_cap: f64,
    config: &RdSolverConfig,
) -> Result<SupervisedGap> {
    let unsupervised = machine_rate_at(instance, proxy, proxy_cap, config)?;
    let task = proxy.with_target(TASK_BOUNDARY);
    let induced = induced_distortion(instance, proxy, &unsupervised.channel, TASK_BOUNDARY)?;
    let supervised = machine_rate_at(instance, &task, induced, config)?;
    Ok(SupervisedGap {
        proxy_distortion: proxy_cap,
        rate_unsupervised: unsupervised.rate,
        induced_task_distortion: induced,
        rate_supervised: supervised.rate,
        gap: unsupervised.rate - supervised.rate,
    })
}

/// Merge two reproduction letters of `approach` that produce the same output
/// at the approach's distortion target.
pub fn merge_equivalent_letters(
    instance: &MachineRdInstance,
    approach: &CodingApproach,
    channel: &Channel,
    keep: usize,
    drop: usize,
) -> Result<Channel> {
    let (cut, target) = approach.positions(instance.model())?;
    let to_target = instance.model().map_between(cut, target)?;
    to_target.input().check_index(keep)?;
    to_target.input().check_index(drop)?;
    if to_target.apply(keep) != to_target.apply(drop) {
        return Err(Error::Channel(format!(
            "letters {keep} and {drop} have different outputs at {:?}",
            approach.target
        )));
    }
    merge_reproduction_letters(channel, keep, drop)
}

/// Redirect reproduction letters at `cut` whose task output no input reaches
/// to an alternative letter that is reachable and no worse for every
/// reachable task output.
///
/// Returns an error naming the first letter without such an alternative.
pub fn redirect_unreachable(instance: &MachineRdInstance, cut: &str, channel: &Channel) -> Result<Channel> {
    let model = instance.model();
    let position = model.boundary(cut)?;
    let h = model.map_between(position, model.depth())?;
    let image = instance.task_image();
    let d_task = instance.task_distortion();
    let reachable: Vec<usize> = (0..image.len()).filter(|&t| image[t]).collect();

    let mut table = Vec::with_capacity(h.input().size());
    for letter in 0..h.input().size() {
        let t_hat = h.apply(letter);
        if image[t_hat] {
            table.push(letter);
            continue;
        }
        let alternative = (0..h.input().size()).find(|&candidate| {
            let t_alt = h.apply(candidate);
            image[t_alt] && reachable.iter().all(|&t| d_task.get(t, t_alt) <= d_task.get(t, t_hat))
        });
        match alternative {
            Some(candidate) => table.push(candidate),
            None => {
                return Err(Error::LiftHypothesis {
                    letter,
                    task_output: t_hat,
                })
            }
        }
    }
    let remap = DeterministicMap::new(h.input().clone(), h.input().clone(), table)?;
    crate::probspace::channel_then_map(channel, &remap)
}

/// Whether every letter at `cut` has a task output inside the image of `f`.
pub fn lift_condition_holds(instance: &MachineRdInstance, cut: &str) -> Result<bool> {
    let position = instance.model().boundary(cut)?;
    Ok(lift_representatives(instance.model(), position)?
        .iter()
        .all(std::result::Result::is_ok))
}
