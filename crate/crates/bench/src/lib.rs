//! Fixtures shared by the benchmarks.

use rdm_core::toy_lab::{sample_dataset, to_feature_set, ToySpace};
use rdm_core::{DistortionMatrix, FiniteDistribution, LabeledFeatureSet, RateMetricCurve};

/// Geometric source on `n` letters with squared-difference distortion onto
/// `m` evenly spaced reproduction points.
pub fn quadratic_source(n: usize, m: usize) -> (FiniteDistribution, DistortionMatrix) {
    let w: Vec<f64> = (0..n).map(|i| 0.85f64.powi(i as i32)).collect();
    let total: f64 = w.iter().sum();
    let p = FiniteDistribution::from_masses(w.iter().map(|v| v / total).collect()).expect("valid masses");
    let rows = (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            (0..m)
                .map(|j| {
                    let y = j as f64 / (m - 1) as f64;
                    (x - y) * (x - y)
                })
                .collect()
        })
        .collect();
    (p, DistortionMatrix::from_rows(rows).expect("valid distortion"))
}

pub fn toy_layer_set(n: usize) -> LabeledFeatureSet {
    to_feature_set(&sample_dataset(n, 7), ToySpace::Layer).expect("toy set")
}

/// Four-point curve with a concave rate-metric shape.
pub fn curve(scale: f64) -> RateMetricCurve {
    RateMetricCurve::new(vec![
        (100.0 * scale, 30.0),
        (200.0 * scale, 33.0),
        (400.0 * scale, 35.5),
        (800.0 * scale, 37.2),
    ])
    .expect("valid curve")
}
