//! Randomized verification of the machine rate-distortion theorems.
//!
//! Instances are sampled from a seeded ChaCha8 generator, so every verdict
//! is reproducible from its seed list. Theorems are keyed by short ids and
//! carry the quoted claim they check.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine_rd::{
    induced_distortion, lift_condition_holds, machine_rate_at, merge_equivalent_letters, proxy_gap, redirect_unreachable,
    reduce, CodingApproach, MachineRdInstance,
};
use crate::probspace::{
    expected_distortion, mutual_information, Alphabet, Channel, DeterministicMap, DistortionMatrix, FiniteDistribution,
    TaskModel, MAX_ALPHABET,
};
use crate::rd_solver::{d_max, d_min, RdSolverConfig};

/// Tolerance for checks asserting one quantity is at most another.
pub const ONE_SIDED_TOL: f64 = 1e-8;
/// Default tolerance for checks asserting two rates are equal.
pub const EQUALITY_TOL: f64 = 1e-6;
/// Minimum supervised gap demanded on strict instances.
pub const STRICT_GAP: f64 = 1e-4;
/// Task-distortion drift allowed when merging letters (summation order only).
pub const MERGE_DISTORTION_TOL: f64 = 1e-12;
/// `ΔI` a merge must reach when the posterior condition holds.
pub const MERGE_STRICT_DECREASE: f64 = 1e-9;
/// Posterior difference above which a merge must strictly reduce `I`.
pub const POSTERIOR_GAP: f64 = 1e-3;
/// Random channels drawn per seed by the merge check.
pub const MERGE_CHANNELS_PER_SEED: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistortionKind {
    /// 0 on the diagonal, 1 elsewhere.
    ZeroOne,
    /// 0 on the diagonal, uniform in `[0.1, 1)` elsewhere.
    RandomNonneg,
    /// Number of differing bits between the two indices.
    Hamming,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    /// `(|X|, |Y1|, |Y2|, |T|)`, non-increasing and at least 2.
    pub sizes: (usize, usize, usize, usize),
    pub seed: u64,
    pub kind: DistortionKind,
    /// Keep every stage map surjective so each reproduction letter has a
    /// reachable task output. When false, one unreachable letter is added at
    /// each cut, leading to an extra task class that is dominated by class 0.
    pub enforce_thm2: bool,
    /// Require `|X| > |T|` so some pair of input letters shares a task output.
    pub enforce_thm4: bool,
}

impl InstanceSpec {
    fn validate(&self) -> Result<()> {
        let (x, y1, y2, t) = self.sizes;
        if !(x >= y1 && y1 >= y2 && y2 >= t && t >= 2) {
            return Err(Error::InstanceSpec(format!(
                "sizes must satisfy |X| >= |Y1| >= |Y2| >= |T| >= 2, got {:?}",
                self.sizes
            )));
        }
        if x > MAX_ALPHABET || (!self.enforce_thm2 && t + 1 > MAX_ALPHABET) {
            return Err(Error::InstanceSpec(format!("sizes {:?} exceed {MAX_ALPHABET}", self.sizes)));
        }
        if self.enforce_thm4 && x == t {
            return Err(Error::InstanceSpec(
                "strict instances need |X| > |T| so two inputs share a task output".into(),
            ));
        }
        Ok(())
    }
}

/// Sample a three-stage model `X → Y1 → Y2 → T` with cuts named `Y1`, `Y2`
/// and distortions at every boundary.
pub fn generate_instance(spec: &InstanceSpec) -> Result<MachineRdInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (x, y1, y2, t) = spec.sizes;

    let weights: Vec<f64> = (0..x).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let source = FiniteDistribution::from_masses(weights.iter().map(|w| w / total).collect())?;

    let g1 = surjective_table(&mut rng, x, y1);
    let mut g2 = surjective_table(&mut rng, y1, y2);
    let mut h2 = surjective_table(&mut rng, y2, t);
    let (y1_out, y2_out, t_out) = if spec.enforce_thm2 {
        (y1, y2, t)
    } else {
        // The new Y1 letter is outside g1's image and leads only to the new class.
        g2.push(y2);
        h2.push(t);
        (y1 + 1, y2 + 1, t + 1)
    };

    let stages = vec![
        DeterministicMap::new(Alphabet::new(x)?, Alphabet::new(y1_out)?, g1)?,
        DeterministicMap::new(Alphabet::new(y1_out)?, Alphabet::new(y2_out)?, g2)?,
        DeterministicMap::new(Alphabet::new(y2_out)?, Alphabet::new(t_out)?, h2)?,
    ];
    let cuts = [("Y1".to_string(), 1), ("Y2".to_string(), 2)].into_iter().collect();
    let model = TaskModel::new(stages, cuts)?;

    let mut d_t = sample_distortion(&mut rng, spec.kind, t_out);
    if !spec.enforce_thm2 {
        for row in d_t.iter_mut().take(t) {
            row[t] = row[0] + 0.5;
        }
    }
    let distortions = [
        ("X", sample_distortion(&mut rng, spec.kind, x)),
        ("Y1", sample_distortion(&mut rng, spec.kind, y1_out)),
        ("Y2", sample_distortion(&mut rng, spec.kind, y2_out)),
        ("T", d_t),
    ]
    .into_iter()
    .map(|(name, rows)| Ok((name.to_string(), DistortionMatrix::from_rows(rows)?)))
    .collect::<Result<_>>()?;
    MachineRdInstance::new(source, model, distortions)
}

fn surjective_table(rng: &mut ChaCha8Rng, n_in: usize, n_out: usize) -> Vec<usize> {
    let mut table: Vec<usize> = (0..n_in).map(|i| if i < n_out { i } else { rng.random_range(0..n_out) }).collect();
    table.shuffle(rng);
    table
}

fn sample_distortion(rng: &mut ChaCha8Rng, kind: DistortionKind, size: usize) -> Vec<Vec<f64>> {
    (0..size)
        .map(|i| {
            (0..size)
                .map(|j| match kind {
                    _ if i == j => 0.0,
                    DistortionKind::ZeroOne => 1.0,
                    DistortionKind::RandomNonneg => rng.random_range(0.1..1.0),
                    DistortionKind::Hamming => f64::from((i ^ j).count_ones()),
                })
                .collect()
        })
        .collect()
}

/// A pair of distinct input letters with the same task output, if any.
pub fn shared_output_pair(instance: &MachineRdInstance) -> Option<(usize, usize)> {
    let f = instance.model().full_map();
    let n = f.input().size();
    (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).find(|&(a, b)| f.apply(a) == f.apply(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Thm1,
    Thm2,
    Thm2a,
    CorMultiSplit,
    CorIntermediateTarget,
    CorDistillation,
    Thm3,
    Thm4,
    Merge,
}

impl TheoremId {
    pub const ALL: [TheoremId; 9] = [
        TheoremId::Thm1,
        TheoremId::Thm2,
        TheoremId::Thm2a,
        TheoremId::CorMultiSplit,
        TheoremId::CorIntermediateTarget,
        TheoremId::CorDistillation,
        TheoremId::Thm3,
        TheoremId::Thm4,
        TheoremId::Merge,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TheoremId::Thm1 => "thm1",
            TheoremId::Thm2 => "thm2",
            TheoremId::Thm2a => "thm2a",
            TheoremId::CorMultiSplit => "cor_multi_split",
            TheoremId::CorIntermediateTarget => "cor_intermediate_target",
            TheoremId::CorDistillation => "cor_distillation",
            TheoremId::Thm3 => "thm3",
            TheoremId::Thm4 => "thm4",
            TheoremId::Merge => "merge",
        }
    }

    /// The quoted claim this check stands for.
    pub fn anchor(self) -> &'static str {
        match self {
            TheoremId::Thm1 => "rates ... are identical",
            TheoremId::Thm2 => "is equal to the minimal achievable rate",
            TheoremId::Thm2a => "there exists an alternative approximation",
            TheoremId::CorMultiSplit => "no difference in the minimum achievable rate",
            TheoremId::CorIntermediateTarget => "equal minimal rates for achieving distortion at some intermediate layer",
            TheoremId::CorDistillation => "cases where the cut-point Y_1 is different from the distillation point are also equivalent",
            TheoremId::Thm3 => "upper-bounded by the input rate-distortion",
            TheoremId::Thm4 => "strictly lower than the input rate-distortion",
            TheoremId::Merge => "the log-sum inequality",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            TheoremId::Thm3 => ONE_SIDED_TOL,
            TheoremId::Thm4 => 0.0,
            TheoremId::Merge => MERGE_DISTORTION_TOL,
            _ => EQUALITY_TOL,
        }
    }

    fn is_equality(self) -> bool {
        self.default_tolerance() == EQUALITY_TOL
    }

    /// Spec for one seed of the default suite.
    pub fn default_spec(self, seed: u64) -> InstanceSpec {
        let x = [4, 6, 8][(seed % 3) as usize];
        let t = 2 + (seed / 3 % 2) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
        let y1 = rng.random_range(t..=x);
        let y2 = rng.random_range(t..=y1);
        let kind = [DistortionKind::ZeroOne, DistortionKind::RandomNonneg, DistortionKind::Hamming][(seed / 6 % 3) as usize];
        InstanceSpec {
            sizes: (x, y1, y2, t),
            seed,
            kind,
            enforce_thm2: !matches!(self, TheoremId::Thm2a) && !(matches!(self, TheoremId::Thm1) && seed % 2 == 1),
            enforce_thm4: matches!(self, TheoremId::Thm4),
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::UnknownTheorem {
                id: s.to_string(),
                valid: TheoremId::ALL.map(TheoremId::id).join(", "),
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceError {
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem: String,
    pub anchor: String,
    pub instances_run: usize,
    pub seeds: Vec<u64>,
    pub distortion_levels: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub failing_seeds: Vec<u64>,
    /// Instances whose solver failed; these count as failures.
    pub errors: Vec<InstanceError>,
}

/// Distortion levels `dmin + k (dmax - dmin) / (count + 1)` for `k = 1..=count`.
pub fn distortion_levels(
    instance: &MachineRdInstance,
    approach: &CodingApproach,
    count: usize,
) -> Result<Vec<f64>> {
    let r = reduce(instance, approach)?;
    let lo = d_min(&r.source, &r.distortion)?;
    let hi = d_max(&r.source, &r.distortion)?;
    Ok((1..=count).map(|k| lo + k as f64 * (hi - lo) / (count + 1) as f64).collect())
}

/// Largest pairwise rate difference among `approaches` at each level of the
/// first approach's distortion range. A rate whose certified bracket is
/// wider than the spread counts with its width.
fn max_rate_spread(
    instance: &MachineRdInstance,
    approaches: &[CodingApproach],
    levels: usize,
    config: &RdSolverConfig,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for level in distortion_levels(instance, &approaches[0], levels)? {
        let matched = approaches
            .iter()
            .map(|a| machine_rate_at(instance, a, level, config))
            .collect::<Result<Vec<_>>>()?;
        let hi = matched.iter().map(|m| m.rate).fold(f64::NEG_INFINITY, f64::max);
        let lo = matched.iter().map(|m| m.rate).fold(f64::INFINITY, f64::min);
        let width = matched.iter().map(|m| m.rate - m.lower_bound).fold(0.0, f64::max);
        worst = worst.max(hi - lo).max(width);
    }
    Ok(worst)
}

fn split(cut: &str, target: &str) -> CodingApproach {
    CodingApproach::model_split(cut, target)
}

fn direct(cut: &str, target: &str) -> CodingApproach {
    CodingApproach::direct(cut, target)
}

fn full(target: &str) -> CodingApproach {
    CodingApproach::full_input(target)
}

/// Violation magnitude of one theorem on one instance.
///
/// Equality checks report the largest rate difference; the one-sided checks
/// report how far the inequality is missed; the strict check reports the
/// shortfall below [`STRICT_GAP`], negative when every gap clears it.
/// `seed` drives the merge check's channels.
pub fn check_instance(
    theorem: TheoremId,
    instance: &MachineRdInstance,
    levels: usize,
    seed: u64,
    config: &RdSolverConfig,
) -> Result<f64> {
    match theorem {
        TheoremId::Thm1 => Ok(max_rate_spread(instance, &[split("Y1", "T"), direct("Y1", "T")], levels, config)?
            .max(max_rate_spread(instance, &[split("Y2", "T"), direct("Y2", "T")], levels, config)?)),
        TheoremId::Thm2 => max_rate_spread(instance, &[split("Y1", "T"), full("T")], levels, config),
        TheoremId::Thm2a => check_alternative(instance, levels, config),
        TheoremId::CorMultiSplit => max_rate_spread(
            instance,
            &[split("Y2", "T"), split("Y1", "T"), full("T"), direct("Y2", "T"), direct("Y1", "T")],
            levels,
            config,
        ),
        TheoremId::CorIntermediateTarget => Ok(max_rate_spread(instance, &[split("Y1", "Y1"), direct("Y1", "Y1")], levels, config)?
            .max(max_rate_spread(instance, &[split("Y2", "Y2"), direct("Y2", "Y2")], levels, config)?)),
        TheoremId::CorDistillation => max_rate_spread(
            instance,
            &[split("Y2", "Y2"), direct("Y2", "Y2"), full("Y2"), split("Y1", "Y2"), direct("Y1", "Y2")],
            levels,
            config,
        ),
        TheoremId::Thm3 => {
            let mut worst = f64::NEG_INFINITY;
            for proxy in [full("X"), split("Y1", "Y1"), full("Y1")] {
                for level in distortion_levels(instance, &proxy, levels)? {
                    let gap = proxy_gap(instance, &proxy, level, config)?;
                    worst = worst.max(-gap.gap);
                }
            }
            Ok(worst.max(0.0))
        }
        TheoremId::Thm4 => {
            let mut worst = f64::NEG_INFINITY;
            for level in distortion_levels(instance, &full("X"), levels)? {
                let gap = proxy_gap(instance, &full("X"), level, config)?;
                worst = worst.max(STRICT_GAP - gap.gap);
            }
            Ok(worst)
        }
        TheoremId::Merge => check_merges(instance, seed, MERGE_CHANNELS_PER_SEED).map(|s| s.violation),
    }
}

fn check_alternative(instance: &MachineRdInstance, levels: usize, config: &RdSolverConfig) -> Result<f64> {
    let mut worst = max_rate_spread(instance, &[split("Y1", "T"), full("T")], levels, config)?;
    for cut in ["Y1", "Y2"] {
        if lift_condition_holds(instance, cut)? {
            continue;
        }
        let approach = split(cut, "T");
        let reduction = reduce(instance, &approach)?;
        for level in distortion_levels(instance, &approach, levels)? {
            let matched = machine_rate_at(instance, &approach, level, config)?;
            let redirected = redirect_unreachable(instance, cut, &matched.channel)?;
            crate::probspace::lift_reproduction(&redirected, instance.model(), cut)?;
            let before = expected_distortion(&reduction.source, &matched.channel, &reduction.distortion)?;
            let after = expected_distortion(&reduction.source, &redirected, &reduction.distortion)?;
            let rate_before = mutual_information(&reduction.source, &matched.channel)?;
            let rate_after = mutual_information(&reduction.source, &redirected)?;
            worst = worst.max(after - before).max(rate_after - rate_before);
        }
    }
    Ok(worst)
}

/// Summary of merging qualifying letter pairs on random channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeSummary {
    pub channels: usize,
    /// Channels whose merged pair met the posterior condition.
    pub strict_channels: usize,
    pub max_distortion_change: f64,
    pub max_rate_change: f64,
    /// Largest `ΔI` among channels meeting the posterior condition.
    pub max_strict_rate_change: f64,
    pub violation: f64,
}

/// Merge a random qualifying pair on `count` random full-input channels.
pub fn check_merges(instance: &MachineRdInstance, seed: u64, count: usize) -> Result<MergeSummary> {
    let f = instance.model().full_map();
    let n = f.input().size();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && f.apply(a) == f.apply(b))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InstanceSpec("no two input letters share a task output".into()));
    }
    let approach = full("T");
    let source = instance.source();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d_6572_6765);
    let mut summary = MergeSummary {
        channels: count,
        strict_channels: 0,
        max_distortion_change: 0.0,
        max_rate_change: f64::NEG_INFINITY,
        max_strict_rate_change: f64::NEG_INFINITY,
        violation: 0.0,
    };
    for _ in 0..count {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let channel = Channel::from_rows(rows)?;
        let (keep, drop) = pairs[rng.random_range(0..pairs.len())];
        let merged = merge_equivalent_letters(instance, &approach, &channel, keep, drop)?;

        let d_change = (induced_distortion(instance, &approach, &merged, "T")?
            - induced_distortion(instance, &approach, &channel, "T")?)
        .abs();
        let i_change = mutual_information(source, &merged)? - mutual_information(source, &channel)?;
        summary.max_distortion_change = summary.max_distortion_change.max(d_change);
        summary.max_rate_change = summary.max_rate_change.max(i_change);
        let mut violation = d_change.max(i_change);
        if posteriors_differ(source, &channel, keep, drop) {
            summary.strict_channels += 1;
            summary.max_strict_rate_change = summary.max_strict_rate_change.max(i_change);
            violation = violation.max(i_change + MERGE_STRICT_DECREASE);
        }
        summary.violation = summary.violation.max(violation);
    }
    Ok(summary)
}

/// Whether `p(x | a)` and `p(x | b)` differ by more than [`POSTERIOR_GAP`]
/// for some `x`, with both letters emitted.
pub fn posteriors_differ(source: &FiniteDistribution, channel: &Channel, a: usize, b: usize) -> bool {
    let p = source.mass();
    let qa: f64 = (0..p.len()).map(|x| p[x] * channel.get(x, a)).sum();
    let qb: f64 = (0..p.len()).map(|x| p[x] * channel.get(x, b)).sum();
    if qa <= 0.0 || qb <= 0.0 {
        return false;
    }
    (0..p.len()).any(|x| (p[x] * channel.get(x, a) / qa - p[x] * channel.get(x, b) / qb).abs() > POSTERIOR_GAP)
}

/// Run one theorem on the given instance specs.
///
/// `tolerance` overrides the theorem's default; one-sided and strict checks
/// keep their fixed thresholds and only the pass cut-off moves.
pub fn verify(
    theorem: TheoremId,
    specs: &[InstanceSpec],
    levels: usize,
    tolerance: Option<f64>,
    config: &RdSolverConfig,
) -> Verdict {
    let tolerance = match tolerance {
        Some(t) if theorem.is_equality() => t,
        _ => theorem.default_tolerance(),
    };
    let outcomes: Vec<(u64, Result<f64>)> = specs
        .par_iter()
        .map(|spec| {
            let outcome = generate_instance(spec).and_then(|inst| check_instance(theorem, &inst, levels, spec.seed, config));
            (spec.seed, outcome)
        })
        .collect();

    let mut verdict = Verdict {
        theorem: theorem.id().to_string(),
        anchor: theorem.anchor().to_string(),
        instances_run: specs.len(),
        seeds: specs.iter().map(|s| s.seed).collect(),
        distortion_levels: levels,
        max_violation: 0.0,
        tolerance,
        pass: true,
        failing_seeds: Vec::new(),
        errors: Vec::new(),
    };
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(violation) => {
                verdict.max_violation = verdict.max_violation.max(violation);
                if violation > tolerance {
                    verdict.failing_seeds.push(seed);
                }
            }
            Err(e) => {
                verdict.failing_seeds.push(seed);
                verdict.errors.push(InstanceError {
                    seed,
                    message: e.to_string(),
                });
            }
        }
    }
    verdict.pass = verdict.failing_seeds.is_empty();
    verdict
}

/// Run one theorem on seeds `first_seed..first_seed + seeds` of the default suite.
pub fn verify_default(
    theorem: TheoremId,
    first_seed: u64,
    seeds: usize,
    levels: usize,
    tolerance: Option<f64>,
    config: &RdSolverConfig,
) -> Verdict {
    let specs: Vec<InstanceSpec> = (first_seed..first_seed + seeds as u64).map(|s| theorem.default_spec(s)).collect();
    verify(theorem, &specs, levels, tolerance, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn spec(sizes: (usize, usize, usize, usize), seed: u64) -> InstanceSpec {
        InstanceSpec {
            sizes,
            seed,
            kind: DistortionKind::ZeroOne,
            enforce_thm2: true,
            enforce_thm4: false,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec((6, 3, 3, 2), 0);
        assert_eq!(generate_instance(&s).unwrap(), generate_instance(&s).unwrap());
        let other = spec((6, 3, 3, 2), 1);
        assert_ne!(generate_instance(&s).unwrap(), generate_instance(&other).unwrap());
    }

    #[test]
    fn stage_maps_are_surjective() {
        for seed in 0..20 {
            let inst = generate_instance(&spec((6, 3, 2, 2), seed)).unwrap();
            for stage in inst.model().stages() {
                let mut hit = vec![false; stage.output().size()];
                for x in 0..stage.input().size() {
                    hit[stage.apply(x)] = true;
                }
                assert!(hit.iter().all(|&h| h), "seed {seed}");
            }
            assert!(inst.source().mass().iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn unenforced_instances_break_the_lift_condition() {
        let mut s = spec((6, 3, 3, 2), 4);
        s.enforce_thm2 = false;
        let inst = generate_instance(&s).unwrap();
        assert!(!lift_condition_holds(&inst, "Y1").unwrap());
        assert!(lift_condition_holds(&generate_instance(&spec((6, 3, 3, 2), 4)).unwrap(), "Y1").unwrap());
    }

    #[test]
    fn strict_instances_have_a_shared_output_pair() {
        let mut s = spec((4, 3, 2, 2), 9);
        s.enforce_thm4 = true;
        let inst = generate_instance(&s).unwrap();
        let (a, b) = shared_output_pair(&inst).unwrap();
        let f = inst.model().full_map();
        assert_eq!(f.apply(a), f.apply(b));
        s.sizes = (2, 2, 2, 2);
        assert!(generate_instance(&s).is_err());
    }

    #[test]
    fn size_constraints() {
        assert!(generate_instance(&spec((3, 4, 2, 2), 0)).is_err());
        assert!(generate_instance(&spec((3, 3, 2, 1), 0)).is_err());
    }

    #[test]
    fn hamming_kind_counts_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = sample_distortion(&mut rng, DistortionKind::Hamming, 4);
        assert_eq!(d[0][3], 2.0);
        assert_eq!(d[1][2], 2.0);
        assert_eq!(d[2][3], 1.0);
    }

    #[test]
    fn theorem_ids_round_trip() {
        for t in TheoremId::ALL {
            assert_eq!(t.id().parse::<TheoremId>().unwrap(), t);
        }
        assert!(matches!("thm9".parse::<TheoremId>(), Err(Error::UnknownTheorem { .. })));
    }

    #[test]
    fn degenerate_task_has_zero_rates() {
        let g = DeterministicMap::from_table(vec![0, 1, 1, 0], 2).unwrap();
        let h = DeterministicMap::from_table(vec![0, 0], 1).unwrap();
        let model = TaskModel::split(g, h, "Y1").unwrap();
        let d = BTreeMap::from([("T".to_string(), DistortionMatrix::from_rows(vec![vec![0.0]]).unwrap())]);
        let inst = MachineRdInstance::new(FiniteDistribution::uniform(4).unwrap(), model, d).unwrap();
        let config = RdSolverConfig::default();
        let v = max_rate_spread(&inst, &[split("Y1", "T"), full("T"), direct("Y1", "T")], 5, &config).unwrap();
        assert_eq!(v, 0.0);
        for a in [split("Y1", "T"), full("T")] {
            assert_eq!(machine_rate_at(&inst, &a, 0.0, &config).unwrap().rate, 0.0);
        }
    }

    #[test]
    fn merge_on_identical_columns_changes_nothing() {
        let mut s = spec((4, 3, 2, 2), 2);
        s.enforce_thm4 = true;
        let inst = generate_instance(&s).unwrap();
        let (a, b) = shared_output_pair(&inst).unwrap();
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|x| {
                let mut row = vec![0.1; 4];
                row[x] += 0.2;
                row[a] = 0.15;
                row[b] = 0.15;
                let s: f64 = row.iter().sum();
                row.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let c = Channel::from_rows(rows).unwrap();
        assert!(!posteriors_differ(inst.source(), &c, a, b));
        let merged = merge_equivalent_letters(&inst, &full("T"), &c, a, b).unwrap();
        let di = mutual_information(inst.source(), &merged).unwrap() - mutual_information(inst.source(), &c).unwrap();
        assert!(di.abs() < 1e-12);
    }

    #[test]
    fn verdict_small_run() {
        let config = RdSolverConfig::default();
        let v = verify_default(TheoremId::Thm1, 0, 3, 2, None, &config);
        assert!(v.pass, "{v:?}");
        assert_eq!(v.instances_run, 3);
    }
}
