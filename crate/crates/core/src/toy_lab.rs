//! The two-class "circles and squares" toy problem.
//!
//! Inputs `(u, v)` have `u ~ U[0, 10]` for both classes and `v` uniform in a
//! narrow band that depends on the class. The first stage `g` bends each
//! class onto a circle of radius 0.2; the second stage `h` reads the class
//! off `v`. MSE-optimal 1-bit quantization loses the class at the input but
//! keeps it after `g`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task_appropriateness::{compute_report, LabeledFeatureSet, Metric};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyClass {
    Square,
    Circle,
}

impl ToyClass {
    pub fn label(self) -> u32 {
        match self {
            ToyClass::Square => 0,
            ToyClass::Circle => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyPoint {
    pub u: f64,
    pub v: f64,
    pub class: ToyClass,
}

/// Sampling ranges; the default is the published setup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub u_range: (f64, f64),
    pub square_v: (f64, f64),
    pub circle_v: (f64, f64),
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            u_range: (0.0, 10.0),
            square_v: (0.8, 1.2),
            circle_v: (2.8, 3.2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToySpace {
    /// The raw input `(u, v)`.
    Input,
    /// The output of the first stage `g`.
    Layer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantizerMethod {
    Analytic,
    Lloyd,
}

pub fn sample_dataset(n: usize, seed: u64) -> Vec<ToyPoint> {
    sample_with(&ToyConfig::default(), n, seed)
}

/// Classes are equiprobable; `u` and `v` are independent given the class.
pub fn sample_with(config: &ToyConfig, n: usize, seed: u64) -> Vec<ToyPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    (0..n)
        .map(|_| {
            let class = if rng.random_bool(0.5) { ToyClass::Circle } else { ToyClass::Square };
            let u = uniform(&mut rng, config.u_range);
            let v = uniform(
                &mut rng,
                match class {
                    ToyClass::Square => config.square_v,
                    ToyClass::Circle => config.circle_v,
                },
            );
            ToyPoint { u, v, class }
        })
        .collect()
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// First stage: move each point onto the radius-0.2 circle around its
/// class center, `(2.5, 3)` above `v = 2` and `(7.5, 1)` below.
pub fn map_g(u: f64, v: f64) -> (f64, f64) {
    let (center_u, center_v) = if v > 2.0 { (2.5, 3.0) } else { (7.5, 1.0) };
    let dv = v - center_v;
    (center_u + sgn(u - 5.0) * (0.04 - dv * dv).abs().sqrt(), v)
}

pub fn map_h(_u: f64, v: f64) -> ToyClass {
    if v > 2.0 {
        ToyClass::Circle
    } else {
        ToyClass::Square
    }
}

pub fn task(u: f64, v: f64) -> ToyClass {
    let (gu, gv) = map_g(u, v);
    map_h(gu, gv)
}

/// Coordinates of a point in the given space.
pub fn embed(point: &ToyPoint, space: ToySpace) -> (f64, f64) {
    match space {
        ToySpace::Input => (point.u, point.v),
        ToySpace::Layer => map_g(point.u, point.v),
    }
}

/// A 1-bit quantizer: `u ≤ boundary` goes to the first representative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyQuantizer {
    pub space: ToySpace,
    pub boundary: f64,
    pub representatives: [(f64, f64); 2],
}

impl ToyQuantizer {
    pub fn new(space: ToySpace, boundary: f64, representatives: [(f64, f64); 2]) -> Result<Self> {
        if representatives[0] == representatives[1] {
            return Err(Error::ToyQuantizer("representatives must be distinct".into()));
        }
        if !boundary.is_finite() {
            return Err(Error::ToyQuantizer(format!("boundary {boundary} is not finite")));
        }
        Ok(Self {
            space,
            boundary,
            representatives,
        })
    }

    /// The published optimal quantizer for `space`.
    pub fn analytic(space: ToySpace) -> Self {
        let representatives = match space {
            ToySpace::Input => [(2.5, 2.0), (7.5, 2.0)],
            ToySpace::Layer => [(2.5, 3.0), (7.5, 1.0)],
        };
        Self {
            space,
            boundary: 5.0,
            representatives,
        }
    }

    pub fn bin(&self, u: f64) -> usize {
        usize::from(u > self.boundary)
    }

    /// Quantize coordinates already embedded in this quantizer's space.
    pub fn quantize(&self, point: (f64, f64)) -> (f64, f64) {
        self.representatives[self.bin(point.0)]
    }

    /// The class the rest of the task model assigns to each bin.
    pub fn bin_classes(&self) -> [ToyClass; 2] {
        self.representatives.map(|(u, v)| match self.space {
            ToySpace::Input => task(u, v),
            ToySpace::Layer => map_h(u, v),
        })
    }
}

/// Mean squared error of quantizing `data` (embedded in the quantizer's space).
pub fn quantizer_mse(q: &ToyQuantizer, data: &[ToyPoint]) -> f64 {
    let total: f64 = data
        .iter()
        .map(|p| {
            let x = embed(p, q.space);
            let r = q.quantize(x);
            (x.0 - r.0).powi(2) + (x.1 - r.1).powi(2)
        })
        .sum();
    total / data.len() as f64
}

/// Fraction of points whose class changes after quantize-then-classify.
pub fn task_error(q: &ToyQuantizer, data: &[ToyPoint]) -> f64 {
    let classes = q.bin_classes();
    let wrong = data
        .iter()
        .filter(|p| classes[q.bin(embed(p, q.space).0)] != p.class)
        .count();
    wrong as f64 / data.len() as f64
}

pub const LLOYD_MAX_ITERATIONS: usize = 10_000;
/// k-means++ restarts; the lowest-MSE run is kept.
pub const LLOYD_RESTARTS: usize = 4;

/// Optimal 1-bit quantizer in `space`, either the published one or fitted by
/// 2-means on `data`. The fitted boundary is the midpoint of the two
/// centroids' `u` coordinates.
pub fn optimal_one_bit_quantizer(
    space: ToySpace,
    data: &[ToyPoint],
    method: QuantizerMethod,
    seed: u64,
) -> Result<ToyQuantizer> {
    if data.is_empty() {
        return Err(Error::ToyQuantizer("no data".into()));
    }
    match method {
        QuantizerMethod::Analytic => Ok(ToyQuantizer::analytic(space)),
        QuantizerMethod::Lloyd => {
            let points: Vec<(f64, f64)> = data.iter().map(|p| embed(p, space)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: Option<([(f64, f64); 2], f64)> = None;
            for _ in 0..LLOYD_RESTARTS {
                let (centers, mse) = lloyd_two_means(&points, &mut rng)?;
                if best.is_none_or(|(_, b)| mse < b) {
                    best = Some((centers, mse));
                }
            }
            let (mut centers, _) = best.expect("at least one restart");
            centers.sort_by(|a, b| a.0.total_cmp(&b.0));
            ToyQuantizer::new(space, 0.5 * (centers[0].0 + centers[1].0), centers)
        }
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

fn lloyd_two_means(points: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Result<([(f64, f64); 2], f64)> {
    let first = points[rng.random_range(0..points.len())];
    let weights: Vec<f64> = points.iter().map(|&p| dist2(p, first)).collect();
    let total: f64 = weights.iter().sum();
    let second = if total > 0.0 {
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = points[points.len() - 1];
        for (p, w) in points.iter().zip(&weights) {
            if pick < *w {
                chosen = *p;
                break;
            }
            pick -= w;
        }
        chosen
    } else {
        return Err(Error::ToyQuantizer("all points coincide".into()));
    };

    let mut centers = [first, second];
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..LLOYD_MAX_ITERATIONS {
        let mut changed = false;
        let mut sums = [(0.0, 0.0, 0usize); 2];
        for (p, a) in points.iter().zip(assignment.iter_mut()) {
            let k = usize::from(dist2(*p, centers[1]) < dist2(*p, centers[0]));
            if *a != k {
                *a = k;
                changed = true;
            }
            sums[k].0 += p.0;
            sums[k].1 += p.1;
            sums[k].2 += 1;
        }
        if !changed {
            let mse = points.iter().zip(&assignment).map(|(p, &k)| dist2(*p, centers[k])).sum::<f64>() / points.len() as f64;
            return Ok((centers, mse));
        }
        for k in 0..2 {
            if sums[k].2 > 0 {
                centers[k] = (sums[k].0 / sums[k].2 as f64, sums[k].1 / sums[k].2 as f64);
            }
        }
    }
    Err(Error::LloydNonConvergence(LLOYD_MAX_ITERATIONS))
}

/// Points in `space` as a two-class feature set (square = 0, circle = 1).
pub fn to_feature_set(data: &[ToyPoint], space: ToySpace) -> Result<LabeledFeatureSet> {
    let mut features = Vec::with_capacity(2 * data.len());
    for p in data {
        let (u, v) = embed(p, space);
        features.extend([u, v]);
    }
    let labels = data.iter().map(|p| p.class.label()).collect();
    LabeledFeatureSet::new(2, 2, features, labels)
}

pub fn toy_appropriateness(space: ToySpace, n: usize, seed: u64) -> Result<f64> {
    appropriateness_of(&sample_dataset(n, seed), space)
}

pub fn appropriateness_of(data: &[ToyPoint], space: ToySpace) -> Result<f64> {
    Ok(compute_report(&to_feature_set(data, space)?, Metric::Mse)?.rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_examples() {
        let (u, v) = map_g(7.0, 3.0);
        assert!((u - 2.7).abs() < 1e-15 && v == 3.0);
        assert_eq!(map_h(u, v), ToyClass::Circle);
        let (u, v) = map_g(3.0, 1.0);
        assert!((u - 7.3).abs() < 1e-15 && v == 1.0);
        assert_eq!(map_h(u, v), ToyClass::Square);
    }

    #[test]
    fn task_model_is_lossless_and_points_lie_on_circles() {
        for p in sample_dataset(10_000, 3) {
            assert_eq!(task(p.u, p.v), p.class);
            let (gu, gv) = map_g(p.u, p.v);
            let center = if p.class == ToyClass::Circle { (2.5, 3.0) } else { (7.5, 1.0) };
            assert!((dist2((gu, gv), center) - 0.04).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        assert_eq!(sample_dataset(2, 11), sample_dataset(2, 11));
        assert_ne!(sample_dataset(2, 11), sample_dataset(2, 12));
        for p in sample_dataset(1000, 0) {
            assert!((0.0..=10.0).contains(&p.u));
            match p.class {
                ToyClass::Square => assert!((0.8..=1.2).contains(&p.v)),
                ToyClass::Circle => assert!((2.8..=3.2).contains(&p.v)),
            }
        }
    }

    #[test]
    fn analytic_quantizers() {
        let qx = ToyQuantizer::analytic(ToySpace::Input);
        assert_eq!((qx.boundary, qx.representatives), (5.0, [(2.5, 2.0), (7.5, 2.0)]));
        assert_eq!(qx.bin_classes(), [ToyClass::Square, ToyClass::Square]);
        assert_eq!(qx.bin(5.0), 0);
        let qy = ToyQuantizer::analytic(ToySpace::Layer);
        assert_eq!(qy.representatives, [(2.5, 3.0), (7.5, 1.0)]);
        assert_eq!(qy.bin_classes(), [ToyClass::Circle, ToyClass::Square]);
    }

    #[test]
    fn degenerate_quantizer() {
        assert!(ToyQuantizer::new(ToySpace::Input, 5.0, [(7.5, 1.0), (7.5, 1.0)]).is_err());
        // Both representatives classify as square, so every circle is wrong.
        let q = ToyQuantizer::new(ToySpace::Input, 5.0, [(2.5, 1.0), (7.5, 1.0)]).unwrap();
        let data = sample_dataset(20_000, 5);
        let circles = data.iter().filter(|p| p.class == ToyClass::Circle).count() as f64 / data.len() as f64;
        assert_eq!(task_error(&q, &data), circles);
    }

    #[test]
    fn lloyd_matches_analytic_mse_on_small_sample() {
        let data = sample_dataset(20_000, 1);
        for space in [ToySpace::Input, ToySpace::Layer] {
            let lloyd = optimal_one_bit_quantizer(space, &data, QuantizerMethod::Lloyd, 0).unwrap();
            let analytic = ToyQuantizer::analytic(space);
            let gap = quantizer_mse(&lloyd, &data) - quantizer_mse(&analytic, &data);
            assert!(gap.abs() < 1e-2, "{space:?}: {gap}");
        }
    }

    #[test]
    fn widened_v_ranges_collapse_rho() {
        let config = ToyConfig {
            square_v: (0.8, 3.2),
            circle_v: (0.8, 3.2),
            ..ToyConfig::default()
        };
        let rho = appropriateness_of(&sample_with(&config, 200_000, 2), ToySpace::Input).unwrap();
        assert!(rho < 1e-3, "{rho}");
    }
}
