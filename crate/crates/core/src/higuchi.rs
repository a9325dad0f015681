//! Higuchi fractal dimension of a time series.
//!
//! For a step `k` and start offset `m` (1-based, `m = 1..=k`) the subseries
//! `X(m), X(m+k), X(m+2k), ...` has `n_m = floor((N - m) / k)` increments.
//! Its normalized length is
//!
//! ```text
//! L_m(k) = [ sum_{i=1}^{n_m} |X(m + i k) - X(m + (i-1) k)| ] * (N - 1) / (n_m k) / k
//! ```
//!
//! and `L(k)` is the mean of `L_m(k)` over the `k` offsets. For a curve of
//! dimension `D`, `L(k) ~ k^-D`, so `D` is minus the slope of `ln L` against
//! `ln k`.
//!
//! Internally samples are 0-based: offset `m` starts at index `m - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::estimation::{estimate_dimension, DimensionEstimate, LogLogPoint};
use crate::signal::TimeSeries;

/// Upper cap on the default `k_max`.
///
/// Larger steps approach the period of ordinary audio-rate tones (a 440 Hz
/// tone at 44.1 kHz repeats every ~100 samples), where sampled smooth curves
/// lose length and read as rough.
pub const DEFAULT_K_MAX: usize = 16;

/// Growth ratio of the geometric part of the default schedule.
const SCHEDULE_RATIO: f64 = 1.3;

/// Every `k` up to this value is included in the default schedule.
const DENSE_PREFIX: usize = 10;

/// Shortest series the estimator will analyze.
pub const MIN_SERIES_LEN: usize = 4;

/// Largest admissible step for a series of length `n`.
pub fn max_feasible_k(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

/// The set of steps `k` used in a Higuchi fit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiguchiConfig {
    /// Requested cap; `None` means `min(floor((N-1)/2), DEFAULT_K_MAX)` at analysis time.
    pub k_max: Option<usize>,
    /// Explicit strictly increasing schedule; `None` means the default
    /// schedule derived from the effective `k_max`.
    pub k_schedule: Option<Vec<usize>>,
}

impl HiguchiConfig {
    pub fn with_k_max(k_max: usize) -> Self {
        HiguchiConfig {
            k_max: Some(k_max),
            k_schedule: None,
        }
    }

    pub fn with_schedule(schedule: Vec<usize>) -> Self {
        HiguchiConfig {
            k_max: schedule.last().copied(),
            k_schedule: Some(schedule),
        }
    }

    /// Resolves the schedule for a series of length `n`, checking feasibility.
    pub fn schedule_for(&self, n: usize) -> Result<Vec<usize>> {
        if n < MIN_SERIES_LEN {
            return Err(FractalError::invalid(format!(
                "series of length {n} is too short (need at least {MIN_SERIES_LEN})"
            )));
        }
        let feasible = max_feasible_k(n);
        let k_max = match self.k_max {
            Some(0) => return Err(FractalError::invalid("k_max must be positive")),
            Some(k) if k > feasible => {
                return Err(FractalError::invalid(format!(
                    "k_max = {k} exceeds floor((N-1)/2) = {feasible} for N = {n}"
                )))
            }
            Some(k) => k,
            None => feasible.min(DEFAULT_K_MAX),
        };
        let schedule = match &self.k_schedule {
            Some(s) => s.clone(),
            None => default_schedule(k_max),
        };
        validate_schedule(&schedule, k_max)?;
        Ok(schedule)
    }
}

/// `1..=10` followed by geometric steps of ratio 1.3 (rounded, deduplicated)
/// that do not exceed `k_max`.
pub fn default_schedule(k_max: usize) -> Vec<usize> {
    let mut schedule: Vec<usize> = (1..=k_max.min(DENSE_PREFIX)).collect();
    let mut k = DENSE_PREFIX as f64;
    loop {
        k *= SCHEDULE_RATIO;
        let step = k.round() as usize;
        if step > k_max {
            break;
        }
        if schedule.last().is_none_or(|&last| step > last) {
            schedule.push(step);
        }
    }
    schedule
}

fn validate_schedule(schedule: &[usize], k_max: usize) -> Result<()> {
    if schedule.len() < 2 {
        return Err(FractalError::invalid(format!(
            "k schedule needs at least 2 steps, got {schedule:?}"
        )));
    }
    if schedule[0] < 1 {
        return Err(FractalError::invalid("k schedule must start at 1 or above"));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FractalError::invalid(format!(
            "k schedule must be strictly increasing, got {schedule:?}"
        )));
    }
    if let Some(&last) = schedule.last() {
        if last > k_max {
            return Err(FractalError::invalid(format!(
                "k schedule reaches {last}, beyond k_max = {k_max}"
            )));
        }
    }
    Ok(())
}

/// Higuchi's normalized curve length `L(k)`.
pub fn curve_length_at_scale(series: &TimeSeries, k: usize) -> Result<f64> {
    let x = series.samples();
    let n = x.len();
    if n < 2 {
        return Err(FractalError::invalid(format!(
            "series of length {n} is too short"
        )));
    }
    let feasible = max_feasible_k(n);
    if k < 1 || k > feasible {
        return Err(FractalError::invalid(format!(
            "k = {k} outside [1, {feasible}] for N = {n}"
        )));
    }
    Ok(curve_length_unchecked(x, k))
}

fn curve_length_unchecked(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let norm = (n - 1) as f64;
    let total: f64 = (0..k)
        .map(|start| {
            // start = m - 1, so n_m = floor((N - m) / k) = (N - 1 - start) / k
            let increments = (n - 1 - start) / k;
            let mut abs_sum = 0.0;
            let mut prev = x[start];
            for &cur in x[start + k..].iter().step_by(k).take(increments) {
                abs_sum += (cur - prev).abs();
                prev = cur;
            }
            abs_sum * norm / (increments * k) as f64 / k as f64
        })
        .sum();
    total / k as f64
}

/// Fits `ln L(k)` against `ln k` over the configured schedule and returns `D = -slope`.
///
/// Constant series have `L(k) = 0` everywhere and yield an estimation error.
pub fn higuchi_dimension(series: &TimeSeries, config: &HiguchiConfig) -> Result<DimensionEstimate> {
    let schedule = config.schedule_for(series.len())?;
    let points: Vec<LogLogPoint> = schedule
        .iter()
        .map(|&k| LogLogPoint::new(k as f64, curve_length_unchecked(series.samples(), k)))
        .collect();
    estimate_dimension(&points)
}
