//! Bjøntegaard-delta comparison of two rate-metric curves.
//!
//! BD-rate fits `log10(rate)` as a function of the metric, BD-metric fits the
//! metric as a function of `log10(rate)`. Both fits are integrated in closed
//! form over the overlap of the two curves' ranges; nothing is extrapolated.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_CURVE_POINTS: usize = 4;

/// Operating points sorted by strictly increasing rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateMetricCurve {
    points: Vec<(f64, f64)>,
}

impl RateMetricCurve {
    /// Points may come in any order; they are sorted by rate.
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < MIN_CURVE_POINTS {
            return Err(Error::Curve(format!(
                "need at least {MIN_CURVE_POINTS} points, got {}",
                points.len()
            )));
        }
        for &(rate, metric) in &points {
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::Curve(format!("rate {rate} is not a positive finite number")));
            }
            if !metric.is_finite() {
                return Err(Error::Curve(format!("metric {metric} is not finite")));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Curve(format!("duplicate rate {}", w[0].0)));
        }
        if points.windows(2).any(|w| w[1].1 < w[0].1) {
            log::warn!("metric is not monotone in rate; BD values may be unreliable");
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn scale_rates(&self, factor: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|&(r, m)| (r * factor, m)).collect())
    }

    pub fn shift_metric(&self, offset: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|&(r, m)| (r, m + offset)).collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fit {
    /// Least-squares cubic polynomial (the classic method).
    #[default]
    Cubic,
    /// Piecewise cubic Hermite interpolation with monotone slopes.
    Pchip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BdMode {
    Rate,
    Metric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BdResult {
    pub bd_rate_percent: Option<f64>,
    pub bd_metric: Option<f64>,
    /// Integration range: metric values for BD-rate, `log10(rate)` for BD-metric.
    pub overlap: (f64, f64),
    /// Average difference of the fitted curves (test minus anchor).
    pub mean_difference: f64,
    pub mode: BdMode,
    pub fit: Fit,
}

/// Average rate difference in percent at equal metric.
pub fn bd_rate(anchor: &RateMetricCurve, test: &RateMetricCurve, fit: Fit) -> Result<BdResult> {
    let swap = |c: &RateMetricCurve| c.points.iter().map(|&(r, m)| (m, r.log10())).collect::<Vec<_>>();
    let (overlap, delta) = mean_difference(&swap(anchor), &swap(test), fit)?;
    Ok(BdResult {
        bd_rate_percent: Some((10f64.powf(delta) - 1.0) * 100.0),
        bd_metric: None,
        overlap,
        mean_difference: delta,
        mode: BdMode::Rate,
        fit,
    })
}

/// Average metric difference at equal rate.
pub fn bd_metric(anchor: &RateMetricCurve, test: &RateMetricCurve, fit: Fit) -> Result<BdResult> {
    let log_rate = |c: &RateMetricCurve| c.points.iter().map(|&(r, m)| (r.log10(), m)).collect::<Vec<_>>();
    let (overlap, delta) = mean_difference(&log_rate(anchor), &log_rate(test), fit)?;
    Ok(BdResult {
        bd_rate_percent: None,
        bd_metric: Some(delta),
        overlap,
        mean_difference: delta,
        mode: BdMode::Metric,
        fit,
    })
}

pub fn bd(anchor: &RateMetricCurve, test: &RateMetricCurve, mode: BdMode, fit: Fit) -> Result<BdResult> {
    match mode {
        BdMode::Rate => bd_rate(anchor, test, fit),
        BdMode::Metric => bd_metric(anchor, test, fit),
    }
}

fn range(points: &[(f64, f64)]) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)))
}

fn mean_difference(anchor: &[(f64, f64)], test: &[(f64, f64)], fit: Fit) -> Result<((f64, f64), f64)> {
    let (a_lo, a_hi) = range(anchor);
    let (t_lo, t_hi) = range(test);
    let lo = a_lo.max(t_lo);
    let hi = a_hi.min(t_hi);
    if !(lo < hi) {
        return Err(Error::NoOverlap);
    }
    let integral = |points: &[(f64, f64)]| -> Result<f64> {
        Ok(match fit {
            Fit::Cubic => Cubic::fit(points)?.integrate(lo, hi),
            Fit::Pchip => Pchip::fit(points)?.integrate(lo, hi),
        })
    };
    let delta = (integral(test)? - integral(anchor)?) / (hi - lo);
    Ok(((lo, hi), delta))
}

/// Least-squares cubic in the normalized variable `t = (x - center) / scale`.
struct Cubic {
    center: f64,
    scale: f64,
    coef: [f64; 4],
}

impl Cubic {
    fn fit(points: &[(f64, f64)]) -> Result<Self> {
        let (lo, hi) = range(points);
        let center = 0.5 * (lo + hi);
        let scale = 0.5 * (hi - lo);
        if !(scale > 0.0) {
            return Err(Error::Curve("fit needs at least two distinct abscissae".into()));
        }
        // Normal equations A^T A c = A^T y.
        let mut m = [[0.0; 5]; 4];
        for &(x, y) in points {
            let t = (x - center) / scale;
            let powers = [1.0, t, t * t, t * t * t];
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += powers[i] * powers[j];
                }
                m[i][4] += powers[i] * y;
            }
        }
        let coef = solve4(m).ok_or_else(|| Error::Curve("cubic fit is singular (need 4 distinct abscissae)".into()))?;
        Ok(Self { center, scale, coef })
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.scale;
        let c = &self.coef;
        self.scale * t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)))
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }
}

fn solve4(mut m: [[f64; 5]; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in (col + 1)..4 {
            let factor = m[row][col] / m[col][col];
            for k in col..5 {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let tail: f64 = ((row + 1)..4).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][4] - tail) / m[row][row];
    }
    Some(x)
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson
/// slopes, non-centered three-point end slopes).
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    fn fit(points: &[(f64, f64)]) -> Result<Self> {
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Curve("piecewise fit needs strictly increasing abscissae".into()));
        }
        let (x, y): (Vec<f64>, Vec<f64>) = sorted.into_iter().unzip();
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Ok(Self { x, y, slopes })
    }

    /// Integral of segment `k` from its left knot to `x`.
    fn partial(&self, k: usize, x: f64) -> f64 {
        let h = self.x[k + 1] - self.x[k];
        let delta = (self.y[k + 1] - self.y[k]) / h;
        let (m0, m1) = (self.slopes[k], self.slopes[k + 1]);
        let c2 = (3.0 * delta - 2.0 * m0 - m1) / h;
        let c3 = (m0 + m1 - 2.0 * delta) / (h * h);
        let s = x - self.x[k];
        s * (self.y[k] + s * (m0 / 2.0 + s * (c2 / 3.0 + s * c3 / 4.0)))
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.x.len() - 1 {
            let lo = a.max(self.x[k]);
            let hi = b.min(self.x[k + 1]);
            if lo < hi {
                total += self.partial(k, hi) - self.partial(k, lo);
            }
        }
        total
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Read a curve from a CSV with a header row, picking two named columns.
pub fn load_curve(path: &Path, rate_column: &str, metric_column: &str) -> Result<RateMetricCurve> {
    read_curve(File::open(path)?, rate_column, metric_column)
}

pub fn read_curve<R: Read>(input: R, rate_column: &str, metric_column: &str) -> Result<RateMetricCurve> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let (rate_at, metric_at) = (column(rate_column)?, column(metric_column)?);
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let field = |at: usize| -> Result<f64> {
            let text = record.get(at).unwrap_or("");
            text.parse().map_err(|_| Error::Parse {
                row,
                message: format!("invalid number {text:?} in column {:?}", &header[at]),
            })
        };
        points.push((field(rate_at)?, field(metric_at)?));
    }
    RateMetricCurve::new(points)
}
