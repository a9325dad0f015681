//! Time-series representation and the deterministic test-signal generators
//! used to validate the dimension estimators.
//!
//! Every generator samples its ideal waveform at exact grid points
//! `t_i = i / sample_rate` with no band limiting. Series length is
//! `round(duration * sample_rate)`.
//!
//! White noise uses ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`); each
//! 64-bit output is mapped to `[0, 1)` through its top 53 bits and then to
//! `[-amplitude, amplitude]`. The seed and this mapping are part of the
//! public contract: a given seed always yields the same series.

use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};

/// Uniformly sampled real-valued signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl TimeSeries {
    /// Builds a series, rejecting non-finite samples and non-positive rates.
    ///
    /// Length is not checked here; estimators enforce their own minimums.
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(FractalError::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(FractalError::invalid(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(TimeSeries {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Returns `scale * x + offset` for every sample.
    pub fn affine(&self, scale: f64, offset: f64) -> Result<TimeSeries> {
        TimeSeries::new(
            self.samples.iter().map(|x| scale * x + offset).collect(),
            self.sample_rate,
        )
    }
}

/// Parameters of the truncated Weierstrass cosine series
/// `W(t) = sum_{n < n_terms} a^n cos(b^n * pi * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassParams {
    a: f64,
    b: f64,
    n_terms: u32,
}

/// Largest omitted tail amplitude `a^n_terms` accepted by [`WeierstrassParams::new`].
pub const WEIERSTRASS_TAIL_BOUND: f64 = 1e-6;

impl WeierstrassParams {
    /// Validates `0 < a < 1`, `b > 1`, `a * b > 1` and picks the smallest
    /// truncation with `a^n_terms < 1e-6`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Self::validate(a, b)?;
        let n_terms = (WEIERSTRASS_TAIL_BOUND.ln() / a.ln()).floor() as u32 + 1;
        Self::with_terms(a, b, n_terms)
    }

    /// Same as [`new`](Self::new) but with an explicit truncation, which must
    /// still satisfy the tail bound.
    pub fn with_terms(a: f64, b: f64, n_terms: u32) -> Result<Self> {
        Self::validate(a, b)?;
        if n_terms == 0 || a.powi(n_terms as i32) >= WEIERSTRASS_TAIL_BOUND {
            return Err(FractalError::invalid(format!(
                "n_terms = {n_terms} leaves a tail amplitude a^n = {:e} >= {WEIERSTRASS_TAIL_BOUND:e}",
                a.powi(n_terms as i32)
            )));
        }
        Ok(WeierstrassParams { a, b, n_terms })
    }

    /// Chooses `a = b^(dimension - 2)` so the graph dimension is `dimension`.
    pub fn for_dimension(dimension: f64, b: f64) -> Result<Self> {
        if !(dimension > 1.0 && dimension < 2.0) {
            return Err(FractalError::invalid(format!(
                "target dimension must lie in (1, 2), got {dimension}"
            )));
        }
        if !(b.is_finite() && b > 1.0) {
            return Err(FractalError::invalid(format!(
                "frequency ratio b must exceed 1, got {b}"
            )));
        }
        Self::new(b.powf(dimension - 2.0), b)
    }

    fn validate(a: f64, b: f64) -> Result<()> {
        if !(a.is_finite() && a > 0.0 && a < 1.0) {
            return Err(FractalError::invalid(format!(
                "amplitude ratio a must lie in (0, 1), got {a}"
            )));
        }
        if !(b.is_finite() && b > 1.0) {
            return Err(FractalError::invalid(format!(
                "frequency ratio b must exceed 1, got {b}"
            )));
        }
        if a * b <= 1.0 {
            return Err(FractalError::invalid(format!(
                "a * b = {} <= 1: the graph is not fractal",
                a * b
            )));
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_terms(&self) -> u32 {
        self.n_terms
    }

    /// Graph dimension `2 + ln(a) / ln(b)`.
    pub fn theoretical_dimension(&self) -> f64 {
        2.0 + self.a.ln() / self.b.ln()
    }
}

fn sample_count(sample_rate: f64, duration: f64) -> Result<usize> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(FractalError::invalid(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(FractalError::invalid(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let n = (duration * sample_rate).round();
    if n < 2.0 {
        return Err(FractalError::invalid(format!(
            "duration * sample_rate = {} gives fewer than 2 samples",
            duration * sample_rate
        )));
    }
    Ok(n as usize)
}

fn periodic_grid(freq: f64, sample_rate: f64, duration: f64, amplitude: f64) -> Result<usize> {
    let n = sample_count(sample_rate, duration)?;
    if !(freq.is_finite() && freq > 0.0) {
        return Err(FractalError::invalid(format!(
            "frequency must be positive, got {freq}"
        )));
    }
    if freq >= sample_rate / 2.0 {
        return Err(FractalError::invalid(format!(
            "frequency {freq} Hz is at or above the Nyquist limit {} Hz",
            sample_rate / 2.0
        )));
    }
    if !amplitude.is_finite() {
        return Err(FractalError::invalid("amplitude must be finite"));
    }
    Ok(n)
}

/// `amplitude * sin(2 pi freq i / sample_rate)`.
pub fn gen_sine(freq: f64, sample_rate: f64, duration: f64, amplitude: f64) -> Result<TimeSeries> {
    let n = periodic_grid(freq, sample_rate, duration, amplitude)?;
    let samples = (0..n)
        .map(|i| amplitude * (2.0 * PI * freq * i as f64 / sample_rate).sin())
        .collect();
    TimeSeries::new(samples, sample_rate)
}

/// Phase in cycles, `[0, 1)`.
fn phase(freq: f64, sample_rate: f64, i: usize) -> f64 {
    (freq * i as f64 / sample_rate).fract()
}

/// Ideal square ("box") wave: `+amplitude` on the first half-period, `-amplitude` on the second.
pub fn gen_square(
    freq: f64,
    sample_rate: f64,
    duration: f64,
    amplitude: f64,
) -> Result<TimeSeries> {
    let n = periodic_grid(freq, sample_rate, duration, amplitude)?;
    let samples = (0..n)
        .map(|i| {
            if phase(freq, sample_rate, i) < 0.5 {
                amplitude
            } else {
                -amplitude
            }
        })
        .collect();
    TimeSeries::new(samples, sample_rate)
}

/// Triangle wave rising linearly from `-amplitude` to `+amplitude` over the
/// first half-period and falling back over the second.
pub fn gen_triangle(
    freq: f64,
    sample_rate: f64,
    duration: f64,
    amplitude: f64,
) -> Result<TimeSeries> {
    let n = periodic_grid(freq, sample_rate, duration, amplitude)?;
    let samples = (0..n)
        .map(|i| {
            let p = phase(freq, sample_rate, i);
            let unit = if p < 0.5 {
                4.0 * p - 1.0
            } else {
                3.0 - 4.0 * p
            };
            amplitude * unit
        })
        .collect();
    TimeSeries::new(samples, sample_rate)
}

/// Samples the truncated Weierstrass series at `t_i = i / sample_rate`.
pub fn gen_weierstrass(
    params: &WeierstrassParams,
    sample_rate: f64,
    duration: f64,
) -> Result<TimeSeries> {
    let n = sample_count(sample_rate, duration)?;
    // Per-term (amplitude, angular rate) pairs; b^n grows past 1e15 only for
    // absurd truncations, and cos of a large finite argument is still finite.
    let terms: Vec<(f64, f64)> = (0..params.n_terms)
        .map(|k| {
            let k = k as i32;
            (params.a.powi(k), params.b.powi(k) * PI)
        })
        .collect();
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            terms.iter().map(|&(amp, w)| amp * (w * t).cos()).sum()
        })
        .collect();
    TimeSeries::new(samples, sample_rate)
}

/// I.i.d. uniform samples in `[-amplitude, amplitude]` from a seeded ChaCha8 stream.
pub fn gen_white_noise(
    seed: u64,
    sample_rate: f64,
    duration: f64,
    amplitude: f64,
) -> Result<TimeSeries> {
    let n = sample_count(sample_rate, duration)?;
    if !amplitude.is_finite() {
        return Err(FractalError::invalid("amplitude must be finite"));
    }
    TimeSeries::new(uniform_noise(seed, n, amplitude), sample_rate)
}

/// Raw noise samples; shared by [`gen_white_noise`] and test fixtures that
/// need a noise vector of an exact length.
pub fn uniform_noise(seed: u64, n: usize, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            amplitude * (2.0 * unit - 1.0)
        })
        .collect()
}

/// `X(i) = i` at unit sample rate.
pub fn gen_ramp(n: usize) -> Result<TimeSeries> {
    if n < 2 {
        return Err(FractalError::invalid(format!(
            "ramp needs at least 2 samples, got {n}"
        )));
    }
    TimeSeries::new((0..n).map(|i| i as f64).collect(), 1.0)
}
