//! Rate-distortion functions on finite alphabets.
//!
//! [`blahut_arimoto`] solves the Lagrangian problem for one slope, [`sweep`]
//! traces a whole curve, and [`rate_at`] evaluates `R(D)` at a prescribed
//! distortion with a certified error bound. [`brute_force_rd`] is an
//! independent grid-search oracle for tiny instances.
//!
//! Slopes are expressed in bits per unit of distortion: the optimal channel
//! at slope `s` has the form `Q(j|x) ∝ q(j) 2^(-s d(x, j))` and the curve's
//! tangent at the resulting point is `-s`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probspace::{ensure_same, expected_distortion, mutual_information, Channel, DistortionMatrix, FiniteDistribution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdSolverConfig {
    /// Lagrange slopes swept by [`sweep`], strictly increasing and non-negative.
    pub slope_grid: Vec<f64>,
    pub max_iterations: usize,
    /// Stop once the Blahut duality gap (bits), or the one-step change of the
    /// Lagrangian, falls below this value. [`rate_at`] uses the gap alone.
    pub convergence_tol: f64,
    /// Reproduction masses below this value are clamped to zero.
    pub support_prune_tol: f64,
    /// Certified accuracy (bits) of [`rate_at`].
    pub match_tol: f64,
}

impl Default for RdSolverConfig {
    fn default() -> Self {
        Self {
            slope_grid: log_spaced(1e-3, 1e3, 64),
            max_iterations: 50_000,
            convergence_tol: 1e-9,
            support_prune_tol: 1e-300,
            match_tol: 2e-9,
        }
    }
}

impl RdSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slope_grid.is_empty() {
            return Err(Error::Config("slope grid is empty".into()));
        }
        if self.slope_grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Config("slopes must be finite and non-negative".into()));
        }
        if self.slope_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("slope grid must be strictly increasing".into()));
        }
        if !(self.convergence_tol > 0.0) || !(self.match_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !(self.support_prune_tol >= 0.0) {
            return Err(Error::Config("support_prune_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// One evaluation of a rate-distortion function.
#[derive(Clone, Debug, PartialEq)]
pub struct RdPoint {
    pub rate: f64,
    pub distortion: f64,
    /// The slope that produced this point; infinite for the minimum-distortion endpoint.
    pub slope: f64,
    pub channel: Channel,
    /// Duality gap in bits: `R(D') >= rate - gap - slope * (D' - distortion)` for every `D'`.
    pub gap: f64,
    pub iterations: usize,
}

impl RdPoint {
    /// Lower bound on `R(at)` implied by this point's supporting line.
    pub fn support_at(&self, at: f64) -> f64 {
        if self.slope.is_infinite() {
            if at <= self.distortion {
                self.rate - self.gap
            } else {
                f64::NEG_INFINITY
            }
        } else {
            self.rate - self.gap - self.slope * (at - self.distortion)
        }
    }
}

/// A swept rate-distortion curve: sorted by distortion, lower convex hull of the solved points.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_distortion(&self) -> f64 {
        self.points[0].distortion
    }

    pub fn max_distortion(&self) -> f64 {
        self.points[self.points.len() - 1].distortion
    }

    /// Linear interpolation of the rate along the curve; `None` below the first point.
    pub fn interpolate(&self, distortion: f64) -> Option<f64> {
        let first = self.points.first()?;
        if distortion < first.distortion {
            return None;
        }
        let k = self.points.partition_point(|p| p.distortion <= distortion);
        if k == self.points.len() {
            return Some(self.points[k - 1].rate);
        }
        let (a, b) = (&self.points[k - 1], &self.points[k]);
        let t = (distortion - a.distortion) / (b.distortion - a.distortion);
        Some(a.rate + t * (b.rate - a.rate))
    }
}

/// Zero-rate distortion: the best single reproduction letter.
pub fn d_max(source: &FiniteDistribution, d: &DistortionMatrix) -> Result<f64> {
    Ok(best_constant_letter(source, d)?.1)
}

/// Expected per-row minimum distortion.
pub fn d_min(source: &FiniteDistribution, d: &DistortionMatrix) -> Result<f64> {
    ensure_same("d_min", d.row_alphabet(), source.alphabet())?;
    Ok(source
        .mass()
        .iter()
        .zip(d.rows())
        .map(|(&p, row)| p * row.iter().copied().fold(f64::INFINITY, f64::min))
        .sum())
}

fn best_constant_letter(source: &FiniteDistribution, d: &DistortionMatrix) -> Result<(usize, f64)> {
    ensure_same("d_max", d.row_alphabet(), source.alphabet())?;
    let m = d.col_alphabet().size();
    let mut best = (0, f64::INFINITY);
    for j in 0..m {
        let cost: f64 = source.mass().iter().zip(d.rows()).map(|(&p, row)| p * row[j]).sum();
        if cost < best.1 {
            best = (j, cost);
        }
    }
    Ok(best)
}

fn zero_rate_point(source: &FiniteDistribution, d: &DistortionMatrix) -> Result<RdPoint> {
    let (letter, distortion) = best_constant_letter(source, d)?;
    Ok(RdPoint {
        rate: 0.0,
        distortion,
        slope: 0.0,
        channel: Channel::constant(source.alphabet().clone(), d.col_alphabet().clone(), letter)?,
        gap: 0.0,
        iterations: 0,
    })
}

/// Blahut-Arimoto iteration on a log-kernel `ln K(x, j)` (`-inf` forbids a pair).
///
/// Returns the channel built from the last reproduction marginal together
/// with its certified duality gap in bits.
///
/// Without `stall_gap`, iteration also stops once the Lagrangian
/// `min_W I + s·D` changes by less than `convergence_tol` in one step. With
/// `stall_gap` set, only the gap counts, and iteration stops early once the
/// gap is below `stall_gap` but has failed to halve over the last
/// [`STALL_WINDOW`] iterations.
fn iterate(
    source: &FiniteDistribution,
    log_kernel: &[f64],
    n_out: usize,
    config: &RdSolverConfig,
    stall_gap: Option<f64>,
) -> std::result::Result<(Vec<f64>, f64, usize), (Vec<f64>, f64, usize)> {
    let p = source.mass();
    let n_in = p.len();
    let mut q = vec![1.0 / n_out as f64; n_out];
    let mut log_z = vec![0.0; n_in];
    let mut log_c = vec![0.0; n_out];
    let mut channel = vec![0.0; n_in * n_out];
    let mut gap = f64::INFINITY;
    let mut checkpoint = f64::INFINITY;
    let mut lagrangian = f64::INFINITY;

    for iteration in 1..=config.max_iterations {
        let log_q: Vec<f64> = q.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();

        for x in 0..n_in {
            let k = &log_kernel[x * n_out..(x + 1) * n_out];
            log_z[x] = log_sum_exp(k.iter().zip(&log_q).map(|(a, b)| a + b));
            let row = &mut channel[x * n_out..(x + 1) * n_out];
            for j in 0..n_out {
                let w = k[j] + log_q[j] - log_z[x];
                row[j] = if w.is_finite() { w.exp() } else { 0.0 };
            }
        }

        for j in 0..n_out {
            log_c[j] = log_sum_exp((0..n_in).filter(|&x| p[x] > 0.0).map(|x| p[x].ln() + log_kernel[x * n_out + j] - log_z[x]));
        }

        let max_log_c = log_c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean_log_c: f64 = (0..n_out)
            .filter(|&j| q[j] > 0.0)
            .map(|j| q[j] * log_c[j].exp() * log_c[j])
            .sum();
        gap = ((max_log_c - mean_log_c) / LN_2).max(0.0);
        if gap < config.convergence_tol {
            return Ok((channel, gap, iteration));
        }
        if stall_gap.is_none() {
            let value = -(0..n_in).filter(|&x| p[x] > 0.0).map(|x| p[x] * log_z[x]).sum::<f64>() / LN_2;
            if (lagrangian - value).abs() < config.convergence_tol {
                return Ok((channel, gap, iteration));
            }
            lagrangian = value;
        }
        if iteration % STALL_WINDOW == 0 {
            if let Some(limit) = stall_gap {
                if gap < limit && gap > 0.5 * checkpoint {
                    return Err((channel, gap, iteration));
                }
            }
            checkpoint = gap;
        }

        let mut total = 0.0;
        for j in 0..n_out {
            q[j] *= log_c[j].exp();
            if q[j] < config.support_prune_tol {
                q[j] = 0.0;
            }
            total += q[j];
        }
        q.iter_mut().for_each(|v| *v /= total);
    }
    Err((channel, gap, config.max_iterations))
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn point_from_channel(
    source: &FiniteDistribution,
    d: &DistortionMatrix,
    rows: Vec<f64>,
    slope: f64,
    gap: f64,
    iterations: usize,
) -> Result<RdPoint> {
    let channel = Channel::from_computed(source.alphabet().clone(), d.col_alphabet().clone(), rows)?;
    Ok(RdPoint {
        rate: mutual_information(source, &channel)?,
        distortion: expected_distortion(source, &channel, d)?,
        slope,
        channel,
        gap,
        iterations,
    })
}

/// Solve the rate-distortion Lagrangian at one slope.
///
/// Slope 0 returns the zero-rate endpoint (the best constant channel).
/// Iteration starts from a uniform reproduction marginal.
pub fn blahut_arimoto(
    source: &FiniteDistribution,
    d: &DistortionMatrix,
    slope: f64,
    config: &RdSolverConfig,
) -> Result<RdPoint> {
    ensure_same("blahut-arimoto", d.row_alphabet(), source.alphabet())?;
    if !(slope >= 0.0) || !slope.is_finite() {
        return Err(Error::Config(format!("slope must be finite and non-negative, got {slope}")));
    }
    if slope == 0.0 {
        return zero_rate_point(source, d);
    }
    if let Some(point) = certified_zero_rate(source, d, slope, config)? {
        return Ok(point);
    }
    let n_out = d.col_alphabet().size();
    let scale = slope * LN_2;
    let log_kernel: Vec<f64> = d.rows().flat_map(|row| row.iter().map(move |&v| -scale * v)).collect();
    solve_kernel(source, d, &log_kernel, n_out, slope, config)
}

/// The zero-rate point, if its duality gap at `slope` is already within
/// tolerance. Below the curve's steepest slope the iteration would only creep
/// towards it.
fn certified_zero_rate(
    source: &FiniteDistribution,
    d: &DistortionMatrix,
    slope: f64,
    config: &RdSolverConfig,
) -> Result<Option<RdPoint>> {
    let mut point = zero_rate_point(source, d)?;
    let letter = point.channel.row(0).iter().position(|&v| v == 1.0).unwrap_or(0);
    let scale = slope * LN_2;
    let p = source.mass();
    let max_log_c = (0..d.col_alphabet().size())
        .map(|j| {
            log_sum_exp(
                (0..p.len())
                    .filter(|&x| p[x] > 0.0)
                    .map(|x| p[x].ln() - scale * (d.get(x, j) - d.get(x, letter))),
            )
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = (max_log_c / LN_2).max(0.0);
    if gap < config.convergence_tol {
        point.slope = slope;
        point.gap = gap;
        return Ok(Some(point));
    }
    Ok(None)
}

/// Like [`blahut_arimoto`], but an unconverged final iterate is returned
/// with its (honest) duality gap instead of an error, and iteration stops
/// early once the gap is below `stall_gap` and no longer shrinking.
fn blahut_arimoto_lenient(
    source: &FiniteDistribution,
    d: &DistortionMatrix,
    slope: f64,
    stall_gap: f64,
    config: &RdSolverConfig,
) -> Result<RdPoint> {
    ensure_same("blahut-arimoto", d.row_alphabet(), source.alphabet())?;
    if let Some(point) = certified_zero_rate(source, d, slope, config)? {
        return Ok(point);
    }
    let scale = slope * LN_2;
    let log_kernel: Vec<f64> = d.rows().flat_map(|row| row.iter().map(move |&v| -scale * v)).collect();
    let (rows, gap, iterations) = match iterate(source, &log_kernel, d.col_alphabet().size(), config, Some(stall_gap)) {
        Ok(found) | Err(found) => found,
    };
    point_from_channel(source, d, rows, slope, gap, iterations)
}

fn solve_kernel(
    source: &FiniteDistribution,
    d: &DistortionMatrix,
    log_kernel: &[f64],
    n_out: usize,
    slope: f64,
    config: &RdSolverConfig,
) -> Result<RdPoint> {
    match iterate(source, log_kernel, n_out, config, None) {
        Ok((rows, gap, iterations)) => point_from_channel(source, d, rows, slope, gap, iterations),
        Err((rows, gap, iterations)) => {
            let last = point_from_channel(source, d, rows, slope, gap, iterations)?;
            Err(Error::NonConvergence {
                slope,
                iterations,
                residual: gap,
                rate: last.rate,
                distortion: last.distortion,
            })
        }
    }
}

/// The minimum-distortion endpoint: the least-rate channel that only uses
/// each row's distortion-minimizing letters.
pub fn min_distortion_point(source: &FiniteDistribution, d: &DistortionMatrix, config: &RdSolverConfig) -> Result<RdPoint> {
    ensure_same("min distortion point", d.row_alphabet(), source.alphabet())?;
    let n_out = d.col_alphabet().size();
    let log_kernel: Vec<f64> = d
        .rows()
        .flat_map(|row| {
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = 1e-12 * min.abs().max(1.0);
            row.iter().map(move |&v| if v <= min + tol { 0.0 } else { f64::NEG_INFINITY })
        })
        .collect();
    solve_kernel(source, d, &log_kernel, n_out, f64::INFINITY, config)
}

/// Trace `R(D)` over the configured slope grid plus both endpoints.
///
/// Points are sorted by distortion; points lying on or above the lower
/// convex hull of the set are discarded.
pub fn sweep(source: &FiniteDistribution, d: &DistortionMatrix, config: &RdSolverConfig) -> Result<RdCurve> {
    config.validate()?;
    let zero = zero_rate_point(source, d)?;
    let dmax = zero.distortion;
    let mut points = vec![min_distortion_point(source, d, config)?, zero];
    let mut failed = Vec::new();
    let mut first_error = None;
    for &slope in config.slope_grid.iter().filter(|&&s| s > 0.0) {
        match blahut_arimoto(source, d, slope, config) {
            // Anything at or beyond the zero-rate distortion is dominated by the zero-rate point.
            Ok(point) if point.distortion >= dmax => {}
            Ok(point) => points.push(point),
            Err(e) => {
                failed.push(slope);
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(first) = first_error {
        return Err(Error::SweepFailed {
            slopes: failed,
            first: Box::new(first),
        });
    }
    Ok(RdCurve {
        points: lower_hull(points),
    })
}

fn lower_hull(mut points: Vec<RdPoint>) -> Vec<RdPoint> {
    points.sort_by(|a, b| a.distortion.total_cmp(&b.distortion).then(a.rate.total_cmp(&b.rate)));
    let span = points.last().map_or(0.0, |p| p.distortion) - points.first().map_or(0.0, |p| p.distortion);
    let d_eps = 1e-12 * span.max(1e-300);
    let mut deduped: Vec<RdPoint> = Vec::with_capacity(points.len());
    for p in points {
        match deduped.last() {
            Some(last) if p.distortion - last.distortion <= d_eps => {}
            _ => deduped.push(p),
        }
    }

    let mut hull: Vec<RdPoint> = Vec::with_capacity(deduped.len());
    for p in deduped {
        while hull.len() >= 2 {
            let (o, a) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
            let cross = (a.distortion - o.distortion) * (p.rate - o.rate) - (a.rate - o.rate) * (p.distortion - o.distortion);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// How far past `match_tol` the bracket of [`rate_at`] may stay when
/// Blahut-Arimoto stalls (at the slope of a straight piece of the curve, or
/// along a nearly flat direction such as two almost equal distortion
/// columns).
const FALLBACK_FACTOR: f64 = 100.0;

/// Solves that use up the whole iteration budget after which [`rate_at`]
/// reports whatever bracket it has.
const MAX_EXHAUSTED: usize = 3;

/// Iterations between stall checks in [`rate_at`]'s solves.
const STALL_WINDOW: usize = 1000;

/// `R(D)` at a prescribed distortion.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchedRate {
    pub distortion: f64,
    /// Achievable upper bound on `R(distortion)`.
    pub rate: f64,
    /// Certified lower bound on `R(distortion)`.
    pub lower_bound: f64,
    /// A channel with expected distortion equal to `distortion` and rate at most `rate`.
    pub channel: Channel,
    pub solves: usize,
}

/// Evaluate `R(target)` by bracketing the target between Blahut-Arimoto
/// points and interpolating along the chord.
///
/// The chord is achievable by a channel mixture, and the two points'
/// supporting lines bound `R(target)` from below. Slopes are refined until
/// the two bounds are within `config.match_tol`. Iterates that stall before
/// converging still enter with their duality gap, which keeps the lower
/// bound valid; if stalls keep the bracket wide, the result says so through
/// `rate - lower_bound` rather than failing.
pub fn rate_at(
    source: &FiniteDistribution,
    d: &DistortionMatrix,
    target: f64,
    config: &RdSolverConfig,
) -> Result<MatchedRate> {
    config.validate()?;
    let dmax = d_max(source, d)?;
    let dmin = d_min(source, d)?;
    let scale = dmax.abs().max(1e-300);
    let zero = zero_rate_point(source, d)?;
    if target >= dmax - 1e-14 * scale {
        return Ok(MatchedRate {
            distortion: zero.distortion,
            rate: 0.0,
            lower_bound: 0.0,
            channel: zero.channel,
            solves: 0,
        });
    }
    if target < dmin - 1e-12 * scale {
        return Err(Error::Infeasible { target, d_min: dmin });
    }

    let stall_gap = 0.5 * FALLBACK_FACTOR * config.match_tol;
    let mut solves = 0;
    let mut lo = zero;
    let mut hi = None;
    let mut slope = 1.0 / (dmax - dmin).max(1e-300);
    for _ in 0..64 {
        let point = blahut_arimoto_lenient(source, d, slope, stall_gap, config)?;
        solves += 1;
        if point.distortion <= target {
            hi = Some(point);
            break;
        }
        lo = point;
        slope *= 4.0;
    }
    let mut hi = match hi {
        Some(point) => point,
        None => {
            solves += 1;
            min_distortion_point(source, d, config)?
        }
    };

    let mut last_side = 0i8;
    let mut streak = 0;
    let mut stalls = 0;
    let mut exhausted = 0;
    for _ in 0..400 {
        let width = lo.distortion - hi.distortion;
        if width <= 0.0 {
            break;
        }
        let weight_hi = (lo.distortion - target) / width;
        let upper = lo.rate + weight_hi * (hi.rate - lo.rate);
        let lower = lo.support_at(target).max(hi.support_at(target));
        let settled = stalls >= 2 && upper - lower <= FALLBACK_FACTOR * config.match_tol;
        if upper - lower <= config.match_tol || settled || exhausted >= MAX_EXHAUSTED {
            return finish(&lo, &hi, target, upper, lower, solves, config);
        }

        let chord = (hi.rate - lo.rate) / (lo.distortion - hi.distortion);
        let geometric = if lo.slope == 0.0 {
            hi.slope / 2.0
        } else if hi.slope.is_infinite() {
            lo.slope * 2.0
        } else {
            (lo.slope * hi.slope).sqrt()
        };
        let mut next = if streak >= 2 { geometric } else { chord };
        if !(next > lo.slope && next < hi.slope) || !next.is_finite() {
            next = geometric;
        }
        if !(next > lo.slope && next < hi.slope) {
            break;
        }
        let point = blahut_arimoto_lenient(source, d, next, stall_gap, config)?;
        solves += 1;
        stalls = if point.gap < config.convergence_tol { 0 } else { stalls + 1 };
        if point.iterations >= config.max_iterations {
            exhausted += 1;
        }
        let side = if point.distortion > target { 1 } else { -1 };
        streak = if side == last_side { streak + 1 } else { 0 };
        last_side = side;
        if side > 0 {
            lo = point;
        } else {
            hi = point;
        }
    }
    let width = lo.distortion - hi.distortion;
    let weight_hi = if width > 0.0 { (lo.distortion - target) / width } else { 1.0 };
    let upper = lo.rate + weight_hi * (hi.rate - lo.rate);
    let lower = lo.support_at(target).max(hi.support_at(target));
    finish(&lo, &hi, target, upper, lower, solves, config)
}

fn finish(
    lo: &RdPoint,
    hi: &RdPoint,
    target: f64,
    upper: f64,
    lower: f64,
    solves: usize,
    config: &RdSolverConfig,
) -> Result<MatchedRate> {
    if upper - lower > FALLBACK_FACTOR * config.match_tol {
        log::warn!("R({target}) certified only to within {:e} bits", upper - lower);
    }
    let width = lo.distortion - hi.distortion;
    let weight_hi = if width > 0.0 { ((lo.distortion - target) / width).clamp(0.0, 1.0) } else { 1.0 };
    let channel = hi.channel.mix(&lo.channel, weight_hi)?;
    Ok(MatchedRate {
        distortion: target,
        rate: upper,
        lower_bound: lower,
        channel,
        solves,
    })
}

/// Grid-search oracle: minimum `I(X; X̂)` over channels whose rows lie on
/// the simplex grid with `grid_steps` subdivisions, subject to expected
/// distortion at most `distortion_cap`.
///
/// An upper bound on `R(distortion_cap)` that tightens as the grid refines.
pub fn brute_force_rd(
    source: &FiniteDistribution,
    d: &DistortionMatrix,
    distortion_cap: f64,
    grid_steps: usize,
) -> Result<f64> {
    ensure_same("brute force", d.row_alphabet(), source.alphabet())?;
    let (n, m) = (source.len(), d.col_alphabet().size());
    if n > 4 || m > 3 || grid_steps > 20 || grid_steps == 0 {
        return Err(Error::TooLarge(format!(
            "{n}x{m} with {grid_steps} grid steps (limits: 4x3, 1..=20 steps)"
        )));
    }

    let grid = simplex_grid(m, grid_steps);
    let neg_entropy: Vec<f64> = grid
        .iter()
        .map(|r| r.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum())
        .collect();
    let p = source.mass();

    // Per source symbol: grid rows sorted by the distortion they contribute.
    let rows_by_cost: Vec<Vec<(f64, usize)>> = (0..n)
        .map(|x| {
            let mut costs: Vec<(f64, usize)> = grid
                .iter()
                .enumerate()
                .map(|(k, r)| (p[x] * r.iter().zip(d.row(x)).map(|(a, b)| a * b).sum::<f64>(), k))
                .collect();
            costs.sort_by(|a, b| a.0.total_cmp(&b.0));
            costs
        })
        .collect();
    let mut min_remaining = vec![0.0; n + 1];
    for x in (0..n).rev() {
        min_remaining[x] = min_remaining[x + 1] + rows_by_cost[x][0].0;
    }

    let cap = distortion_cap + 1e-12 * distortion_cap.abs().max(1.0);
    let mut search = GridSearch {
        p,
        grid: &grid,
        neg_entropy: &neg_entropy,
        rows_by_cost: &rows_by_cost,
        min_remaining: &min_remaining,
        cap,
        best: f64::INFINITY,
    };
    search.descend(0, &vec![0.0; m], 0.0, 0.0);
    if search.best.is_finite() {
        Ok(search.best.max(0.0))
    } else {
        Err(Error::Infeasible {
            target: distortion_cap,
            d_min: d_min(source, d)?,
        })
    }
}

struct GridSearch<'a> {
    p: &'a [f64],
    grid: &'a [Vec<f64>],
    neg_entropy: &'a [f64],
    rows_by_cost: &'a [Vec<(f64, usize)>],
    min_remaining: &'a [f64],
    cap: f64,
    best: f64,
}

impl GridSearch<'_> {
    fn descend(&mut self, x: usize, marginal: &[f64], distortion: f64, conditional: f64) {
        let n = self.p.len();
        if x == n {
            let output_entropy: f64 = -marginal.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>();
            let info = output_entropy + conditional;
            if info < self.best {
                self.best = info;
            }
            return;
        }
        let mut next = marginal.to_vec();
        for &(cost, k) in &self.rows_by_cost[x] {
            if distortion + cost + self.min_remaining[x + 1] > self.cap {
                break;
            }
            for (nj, (&mj, &rj)) in next.iter_mut().zip(marginal.iter().zip(&self.grid[k])) {
                *nj = mj + self.p[x] * rj;
            }
            self.descend(x + 1, &next, distortion + cost, conditional + self.p[x] * self.neg_entropy[k]);
        }
    }
}

/// All points of the `m`-simplex with coordinates in multiples of `1/steps`.
fn simplex_grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
    fn fill(prefix: &mut Vec<usize>, m: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            fill(prefix, m, left - k, out);
            prefix.pop();
        }
    }
    let mut counts = Vec::new();
    fill(&mut Vec::with_capacity(m), m, steps, &mut counts);
    counts
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / steps as f64).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_entropy(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
        }
    }

    fn hamming_pair() -> (FiniteDistribution, DistortionMatrix) {
        (FiniteDistribution::uniform(2).unwrap(), DistortionMatrix::hamming(2).unwrap())
    }

    #[test]
    fn default_config_is_valid() {
        let c = RdSolverConfig::default();
        c.validate().unwrap();
        assert_eq!(c.slope_grid.len(), 64);
        assert!((c.slope_grid[0] - 1e-3).abs() < 1e-15);
        assert!((c.slope_grid[63] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn config_rejects_bad_grids() {
        let mut c = RdSolverConfig::default();
        c.slope_grid = vec![];
        assert!(c.validate().is_err());
        c.slope_grid = vec![1.0, 1.0];
        assert!(c.validate().is_err());
        c.slope_grid = vec![-1.0, 1.0];
        assert!(c.validate().is_err());
        c.slope_grid = vec![1.0];
        c.convergence_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn slope_zero_is_zero_rate_endpoint() {
        let source = FiniteDistribution::from_masses(vec![0.2, 0.5, 0.3]).unwrap();
        let d = DistortionMatrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.5], vec![1.0, 1.0]]).unwrap();
        let point = blahut_arimoto(&source, &d, 0.0, &RdSolverConfig::default()).unwrap();
        assert_eq!(point.rate, 0.0);
        assert!((point.distortion - d_max(&source, &d).unwrap()).abs() < 1e-15);
        assert!(point.channel.rows().all(|r| r == [0.0, 1.0]));
    }

    #[test]
    fn binary_hamming_matches_closed_form() {
        let (source, d) = hamming_pair();
        let config = RdSolverConfig::default();
        for k in 0..9 {
            let target = 0.05 + 0.05 * k as f64;
            let slope = ((1.0 - target) / target).log2();
            let point = blahut_arimoto(&source, &d, slope, &config).unwrap();
            assert!((point.distortion - target).abs() < 1e-9);
            assert!((point.rate - (1.0 - binary_entropy(target))).abs() < 1e-6);
        }
    }

    #[test]
    fn d_min_d_max_examples() {
        let zero = DistortionMatrix::from_rows(vec![vec![0.0; 3]; 2]).unwrap();
        let p = FiniteDistribution::uniform(2).unwrap();
        assert_eq!(d_max(&p, &zero).unwrap(), 0.0);
        assert_eq!(d_min(&p, &zero).unwrap(), 0.0);
        let (source, d) = hamming_pair();
        assert_eq!(d_max(&source, &d).unwrap(), 0.5);
        assert_eq!(d_min(&source, &d).unwrap(), 0.0);
    }

    #[test]
    fn d_min_d_max_by_enumeration() {
        let p = FiniteDistribution::from_masses(vec![0.1, 0.6, 0.3]).unwrap();
        let d = DistortionMatrix::from_rows(vec![vec![0.3, 0.9, 0.2], vec![0.5, 0.1, 0.7], vec![0.8, 0.4, 0.0]]).unwrap();
        // Enumerate every constant channel for the zero-rate value.
        let constants: Vec<f64> = (0..3)
            .map(|j| (0..3).map(|x| p.mass()[x] * d.get(x, j)).sum())
            .collect();
        let expected_max = constants.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(d_max(&p, &d).unwrap(), expected_max);
        let expected_min = 0.1 * 0.2 + 0.6 * 0.1 + 0.3 * 0.0;
        assert!((d_min(&p, &d).unwrap() - expected_min).abs() < 1e-15);
    }

    #[test]
    fn lossless_endpoint_is_entropy() {
        let source = FiniteDistribution::uniform(4).unwrap();
        let d = DistortionMatrix::hamming(4).unwrap();
        let curve = sweep(&source, &d, &RdSolverConfig::default()).unwrap();
        let first = &curve.points[0];
        assert_eq!(first.distortion, 0.0);
        assert!((first.rate - 2.0).abs() < 1e-9);
        assert_eq!(curve.points.last().unwrap().rate, 0.0);
    }

    #[test]
    fn constant_zero_matrix_collapses_to_one_point() {
        let source = FiniteDistribution::uniform(3).unwrap();
        let d = DistortionMatrix::from_rows(vec![vec![0.0; 3]; 3]).unwrap();
        let curve = sweep(&source, &d, &RdSolverConfig::default()).unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve.points[0].rate, 0.0);
        assert_eq!(curve.points[0].distortion, 0.0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let (source, d) = hamming_pair();
        let config = RdSolverConfig {
            max_iterations: 1,
            convergence_tol: 1e-300,
            ..RdSolverConfig::default()
        };
        let source = FiniteDistribution::from_masses(vec![0.3, 0.7]).unwrap_or(source);
        match blahut_arimoto(&source, &d, 4.0, &config) {
            Err(Error::NonConvergence { iterations, residual, .. }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rate_at_binary_hamming() {
        let (source, d) = hamming_pair();
        let config = RdSolverConfig::default();
        for &target in &[0.05, 0.11, 0.25, 0.4, 0.45] {
            let m = rate_at(&source, &d, target, &config).unwrap();
            let exact = 1.0 - binary_entropy(target);
            assert!(m.lower_bound <= exact + 1e-9 && exact <= m.rate + 1e-9, "{target}: {m:?}");
            assert!(m.rate - m.lower_bound <= config.match_tol);
            let dist = expected_distortion(&source, &m.channel, &d).unwrap();
            assert!((dist - target).abs() < 1e-12);
            assert!(mutual_information(&source, &m.channel).unwrap() <= m.rate + 1e-12);
        }
        assert_eq!(rate_at(&source, &d, 0.5, &config).unwrap().rate, 0.0);
        assert_eq!(rate_at(&source, &d, 0.7, &config).unwrap().rate, 0.0);
        assert!((rate_at(&source, &d, 0.0, &config).unwrap().rate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rate_at_below_d_min_is_infeasible() {
        let p = FiniteDistribution::uniform(2).unwrap();
        let d = DistortionMatrix::from_rows(vec![vec![0.5, 1.0], vec![1.0, 0.5]]).unwrap();
        assert!(matches!(
            rate_at(&p, &d, 0.2, &RdSolverConfig::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn brute_force_limits_and_zero_rate() {
        let (source, d) = hamming_pair();
        assert_eq!(brute_force_rd(&source, &d, 0.5, 10).unwrap(), 0.0);
        assert_eq!(brute_force_rd(&source, &d, 0.9, 10).unwrap(), 0.0);
        let big = FiniteDistribution::uniform(5).unwrap();
        let dbig = DistortionMatrix::hamming(5).unwrap();
        assert!(matches!(brute_force_rd(&big, &dbig, 0.1, 10), Err(Error::TooLarge(_))));
        assert!(matches!(brute_force_rd(&source, &d, 0.1, 21), Err(Error::TooLarge(_))));
    }

    #[test]
    fn brute_force_binary_hamming() {
        let (source, d) = hamming_pair();
        let exact = 1.0 - binary_entropy(0.25);
        assert!((exact - 0.1887).abs() < 1e-4);
        let grid = brute_force_rd(&source, &d, 0.25, 20).unwrap();
        assert!(grid >= exact - 1e-12);
        assert!(grid - exact < 2e-2);
    }

    #[test]
    fn simplex_grid_size() {
        assert_eq!(simplex_grid(3, 20).len(), 231);
        assert_eq!(simplex_grid(2, 4).len(), 5);
        assert!(simplex_grid(3, 7).iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }
}
