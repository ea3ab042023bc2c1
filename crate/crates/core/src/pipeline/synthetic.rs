//! Synthetic arterial-pressure recordings.
//!
//! Each beat is a diastolic floor plus four pulse waves: ejection, late
//! systolic reflection, dicrotic wave and diastolic runoff. Every wave has the
//! gamma-like profile `(t/μ)^m · e^{m(1 − t/μ)}`, which vanishes at the foot,
//! peaks at `μ` and stays positive afterwards, so the foot of every beat is
//! exactly its first sample.
//!
//! The diastolic floor defaults to zero. A window standing on a plateau meets
//! the zero boundary of the operator in a step, and no handful of solitons can
//! follow a step; floor-free pulses reconstruct to 1e-3 with five to ten.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{analyze_beat, BeatConfig, BeatWindow};
use crate::error::{Result, SbsaError};
use crate::signal::Signal;

/// One pulse wave: `amplitude · (t/peak)^order · e^{order(1 − t/peak)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    /// mmHg.
    pub amplitude: f64,
    /// Seconds after the foot.
    pub peak: f64,
    /// Sharpness; the relative width is about `1/√order`.
    pub order: f64,
}

impl Wave {
    pub const fn new(amplitude: f64, peak: f64, order: f64) -> Self {
        Self {
            amplitude,
            peak,
            order,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let r = t / self.peak;
        self.amplitude * (self.order * (r.ln() + 1.0 - r)).exp()
    }
}

/// Shape of one beat. All waves have decayed below 0.5 mmHg 0.7 s after the
/// foot, so the analyzed indices hardly depend on the beat's length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatShape {
    pub diastolic: f64,
    /// Ejection wave.
    pub systolic: Wave,
    /// Late systolic (reflected) wave.
    pub tidal: Wave,
    pub dicrotic: Wave,
    /// Diastolic runoff.
    pub runoff: Wave,
}

impl Default for BeatShape {
    fn default() -> Self {
        Self {
            diastolic: 0.0,
            systolic: Wave::new(42.0, 0.12, 14.0),
            tidal: Wave::new(18.0, 0.22, 40.0),
            dicrotic: Wave::new(9.0, 0.39, 80.0),
            runoff: Wave::new(14.0, 0.31, 10.0),
        }
    }
}

impl BeatShape {
    /// Pressure `t` seconds after the foot.
    pub fn pressure(&self, t: f64) -> f64 {
        self.diastolic
            + self.systolic.at(t)
            + self.tidal.at(t)
            + self.dicrotic.at(t)
            + self.runoff.at(t)
    }

    /// The beat sampled from its foot for `len` samples.
    pub fn sample(&self, len: usize, dt: f64) -> Vec<f64> {
        (0..len).map(|i| self.pressure(i as f64 * dt)).collect()
    }
}

/// Beat-to-beat scatter of the shape around [`BeatShape::default`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeVariability {
    /// Relative standard deviation of every wave amplitude.
    pub amplitude: f64,
    /// Relative standard deviation of every wave's peak time.
    pub timing: f64,
}

impl Default for ShapeVariability {
    fn default() -> Self {
        Self {
            amplitude: 0.06,
            timing: 0.035,
        }
    }
}

impl ShapeVariability {
    fn draw(&self, rng: &mut ChaCha8Rng) -> BeatShape {
        let base = BeatShape::default();
        let mut jitter = |w: Wave| -> Wave {
            let mut factor = |rel: f64| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                (1.0 + rel * z.clamp(-3.0, 3.0)).max(0.1)
            };
            Wave {
                amplitude: w.amplitude * factor(self.amplitude),
                peak: w.peak * factor(self.timing),
                order: w.order,
            }
        };
        BeatShape {
            diastolic: base.diastolic,
            systolic: jitter(base.systolic),
            tidal: jitter(base.tidal),
            dicrotic: jitter(base.dicrotic),
            runoff: jitter(base.runoff),
        }
    }
}

/// Lag-one coupling between a beat's `|λ₁|` and the next pulse interval:
/// `PI(n+1) = slope·|λ₁(n)| + intercept + ε`, `ε ~ N(0, noise_ms²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Coupling {
    /// ms per s⁻².
    pub slope: f64,
    /// ms; `None` centers the intervals on `mean_pi_ms` at the `|λ₁|` of
    /// the default beat.
    pub intercept: Option<f64>,
    pub noise_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecordingSpec {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub mean_pi_ms: f64,
    /// Standard deviation of uncoupled pulse intervals.
    pub pi_jitter_ms: f64,
    pub shape: ShapeVariability,
    /// When set, intervals are driven by the analyzed `|λ₁|` of the previous beat.
    pub coupling: Option<Lambda1Coupling>,
    pub seed: u64,
}

impl Default for RecordingSpec {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            sample_rate_hz: 250.0,
            mean_pi_ms: 850.0,
            pi_jitter_ms: 30.0,
            shape: ShapeVariability::default(),
            coupling: None,
            seed: 1,
        }
    }
}

/// A generated recording with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecording {
    pub signal: Signal,
    /// Foot index of every complete beat plus the closing foot.
    pub feet: Vec<usize>,
    pub shapes: Vec<BeatShape>,
    /// `|λ₁|` computed while generating (coupled recordings only).
    pub lambda1: Vec<f64>,
}

impl SyntheticRecording {
    pub fn windows(&self) -> Vec<BeatWindow> {
        self.feet
            .windows(2)
            .map(|w| BeatWindow::new(w[0], w[1], self.signal.time(w[0])))
            .collect()
    }
}

/// `|λ₁|` of the default beat at the mean interval.
fn pilot_lambda1(spec: &RecordingSpec, beat_cfg: &BeatConfig) -> Result<f64> {
    let dt = 1.0 / spec.sample_rate_hz;
    let len = ((spec.mean_pi_ms / 1000.0) * spec.sample_rate_hz).round() as usize;
    let beat = Signal::new(BeatShape::default().sample(len, dt), dt, 0.0)?;
    let w = BeatWindow::new(0, len, 0.0);
    Ok(analyze_beat(&beat, &w, len as f64 * dt, beat_cfg)?.lambda1_abs)
}

/// Builds a recording of consecutive synthetic beats.
///
/// With a coupling, each beat is analyzed with `beat_cfg` as soon as it is
/// drawn and the next interval is set from its `|λ₁|`; the pipeline run with
/// the same configuration on the output reproduces those values exactly.
pub fn synthesize_recording(
    spec: &RecordingSpec,
    beat_cfg: &BeatConfig,
) -> Result<SyntheticRecording> {
    if !(spec.sample_rate_hz > 0.0 && spec.duration_s > 0.0 && spec.mean_pi_ms > 0.0) {
        return Err(SbsaError::InvalidInput(
            "duration, sample rate and mean interval must be positive".into(),
        ));
    }
    let dt = 1.0 / spec.sample_rate_hz;
    let total = (spec.duration_s * spec.sample_rate_hz).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = Normal::new(0.0, spec.pi_jitter_ms.max(0.0))
        .map_err(|e| SbsaError::InvalidInput(e.to_string()))?;
    let noise = Normal::new(0.0, spec.coupling.map_or(0.0, |c| c.noise_ms.max(0.0)))
        .map_err(|e| SbsaError::InvalidInput(e.to_string()))?;

    let mut samples = Vec::with_capacity(total + 1024);
    let mut feet = Vec::new();
    let mut shapes = Vec::new();
    let mut lambda1 = Vec::new();
    let mut pi_ms = spec.mean_pi_ms;
    let mut intercept = None;

    while samples.len() < total {
        let len = ((pi_ms / 1000.0) * spec.sample_rate_hz).round().max(16.0) as usize;
        let shape = spec.shape.draw(&mut rng);
        let beat = shape.sample(len, dt);
        let start = samples.len();
        feet.push(start);
        samples.extend_from_slice(&beat);
        shapes.push(shape);

        pi_ms = match spec.coupling {
            Some(c) => {
                let beat_signal = Signal::new(beat, dt, start as f64 * dt)?;
                let window = BeatWindow::new(0, len, 0.0);
                let record = analyze_beat(&beat_signal, &window, len as f64 * dt, beat_cfg)?;
                lambda1.push(record.lambda1_abs);
                let b = match (c.intercept, intercept) {
                    (Some(b), _) | (None, Some(b)) => b,
                    (None, None) => {
                        let b = spec.mean_pi_ms - c.slope * pilot_lambda1(spec, beat_cfg)?;
                        intercept = Some(b);
                        b
                    }
                };
                c.slope * record.lambda1_abs + b + noise.sample(&mut rng)
            }
            None => spec.mean_pi_ms + jitter.sample(&mut rng),
        }
        .clamp(300.0, 2000.0);
    }
    // A short partial beat closes the last window with a foot.
    feet.push(samples.len());
    let tail = spec
        .shape
        .draw(&mut rng)
        .sample(((0.2 * spec.sample_rate_hz) as usize).max(3), dt);
    samples.extend_from_slice(&tail);

    Ok(SyntheticRecording {
        signal: Signal::new(samples, dt, 0.0)?,
        feet,
        shapes,
        lambda1,
    })
}
