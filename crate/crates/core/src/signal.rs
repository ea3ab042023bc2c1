//! Uniformly sampled real signals.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbsaError};

/// A uniform time grid: `len` points starting at `t0` with step `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub len: usize,
    pub dt: f64,
    pub t0: f64,
}

impl Grid {
    /// Grid covering `[start, end]` with step `dt`, endpoints included.
    pub fn on_interval(start: f64, end: f64, dt: f64) -> Self {
        Self {
            len: ((end - start) / dt).round() as usize + 1,
            dt,
            t0: start,
        }
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }
}

/// A uniformly sampled, finite, real-valued time series.
///
/// `dt` is the sample step in seconds and `t0` the time of the first sample.
/// Construction validates the invariants, so every `Signal` in circulation has
/// at least three finite samples and a positive finite step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    dt: f64,
    t0: f64,
}

impl Signal {
    pub const MIN_LEN: usize = 3;

    pub fn new(samples: Vec<f64>, dt: f64, t0: f64) -> Result<Self> {
        if samples.len() < Self::MIN_LEN {
            return Err(SbsaError::InvalidInput(format!(
                "signal needs at least {} samples, got {}",
                Self::MIN_LEN,
                samples.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SbsaError::InvalidInput(format!(
                "sample step must be positive and finite, got {dt}"
            )));
        }
        if !t0.is_finite() {
            return Err(SbsaError::InvalidInput(format!(
                "start time {t0} is not finite"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SbsaError::InvalidInput(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(Self { samples, dt, t0 })
    }

    /// Samples `f` on `t0, t0 + dt, ...` for `len` points.
    pub fn from_fn(len: usize, dt: f64, t0: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..len).map(|i| f(t0 + i as f64 * dt)).collect();
        Self::new(samples, dt, t0)
    }

    /// Samples `f` on the uniform grid covering `[start, end]` with step `dt`.
    pub fn on_interval(start: f64, end: f64, dt: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(end > start) {
            return Err(SbsaError::InvalidInput(format!(
                "empty interval [{start}, {end}]"
            )));
        }
        let len = ((end - start) / dt).round() as usize + 1;
        Self::from_fn(len, dt, start, f)
    }

    /// Zero-valued signal on the same grid as `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            samples: vec![0.0; self.samples.len()],
            dt: self.dt,
            t0: self.t0,
        }
    }

    /// Replaces the samples, keeping the grid. Lengths must match.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self {
            samples,
            dt: self.dt,
            t0: self.t0,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid {
            len: self.samples.len(),
            dt: self.dt,
            t0: self.t0,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |i| self.time(i))
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    /// Trapezoid-rule integral of `f(y)` over the window.
    pub fn integrate_with(&self, f: impl Fn(f64) -> f64) -> f64 {
        trapezoid(
            self.samples.iter().map(|&v| f(v)),
            self.samples.len(),
            self.dt,
        )
    }

    pub fn integral(&self) -> f64 {
        self.integrate_with(|v| v)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.samples.iter().all(|&v| v >= 0.0)
    }

    /// Copies samples `[start, end)` into a new signal with the matching start time.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if end > self.samples.len() || start >= end {
            return Err(SbsaError::InvalidInput(format!(
                "slice [{start}, {end}) outside signal of length {}",
                self.samples.len()
            )));
        }
        Self::new(self.samples[start..end].to_vec(), self.dt, self.time(start))
    }

    /// The same signal with `pad` zero samples added on each side, so the
    /// window edges of the operator move away from the well.
    pub fn zero_padded(&self, pad: usize) -> Self {
        let mut samples = vec![0.0; self.samples.len() + 2 * pad];
        samples[pad..pad + self.samples.len()].copy_from_slice(&self.samples);
        Self {
            samples,
            dt: self.dt,
            t0: self.t0 - pad as f64 * self.dt,
        }
    }
}

pub(crate) fn trapezoid(values: impl Iterator<Item = f64>, len: usize, dt: f64) -> f64 {
    let mut sum = 0.0;
    for (i, v) in values.enumerate() {
        let w = if i == 0 || i + 1 == len { 0.5 } else { 1.0 };
        sum += w * v;
    }
    sum * dt
}

/// Relative squared error `Σ(a − b)² / Σa²`.
pub fn relative_mse(reference: &[f64], approx: &[f64]) -> f64 {
    let (num, den) = reference
        .iter()
        .zip(approx)
        .fold((0.0, 0.0), |(n, d), (&r, &a)| {
            (n + (r - a) * (r - a), d + r * r)
        });
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}
