//! Beat-to-beat analysis of arterial pressure recordings.
//!
//! A recording is cut foot to foot into beats. Each beat's raw pressure is the
//! potential of its own decomposition, with `χ̂` chosen per beat, and yields
//! one [`BeatRecord`]. Records feed lag-one baroreflex pairings.

pub mod synthetic;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SbsaError};
use crate::invariants::{invariant_set, InvariantSet};
use crate::signal::Signal;
use crate::transform::{select_chi, split_phases, ChiSelectionConfig, PhaseSplit, SbsaResult};

/// Shortest admissible beat, in samples.
pub const MIN_BEAT_SAMPLES: usize = 16;
/// Coarsest admissible sampling step (50 Hz).
pub const MAX_SAMPLE_STEP: f64 = 0.02;
/// Pulse intervals outside this band (ms) are flagged as implausible.
pub const PLAUSIBLE_PI_MS: (f64, f64) = (250.0, 2500.0);

/// Half-open sample range `[start_index, end_index)` of one beat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatWindow {
    pub start_index: usize,
    pub end_index: usize,
    /// Time of the first sample, s.
    pub onset_time: f64,
}

impl BeatWindow {
    pub fn new(start_index: usize, end_index: usize, onset_time: f64) -> Self {
        Self {
            start_index,
            end_index,
            onset_time,
        }
    }

    pub fn len(&self) -> usize {
        self.end_index - self.start_index
    }

    pub fn is_empty(&self) -> bool {
        self.end_index <= self.start_index
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Upstroke threshold as a fraction of the steepest slope in the recording.
    pub upstroke_fraction: f64,
    /// Minimum spacing between upstrokes, s.
    pub refractory_s: f64,
    /// Foot indices supplied from outside; skips detection when set.
    pub annotations: Option<Vec<usize>>,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            upstroke_fraction: 0.5,
            refractory_s: 0.25,
            annotations: None,
        }
    }
}

/// Cuts a recording into consecutive foot-to-foot beats.
///
/// The foot of a beat is the lowest sample between the previous upstroke and
/// its own. Samples before the first foot and after the last are discarded.
pub fn segment_beats(recording: &Signal, cfg: &SegmentationConfig) -> Result<Vec<BeatWindow>> {
    if let Some(feet) = &cfg.annotations {
        return windows_from_feet(recording, feet);
    }
    if recording.dt() > MAX_SAMPLE_STEP {
        return Err(SbsaError::InvalidInput(format!(
            "sampling step {} s is coarser than 50 Hz",
            recording.dt()
        )));
    }
    if !(cfg.upstroke_fraction > 0.0 && cfg.upstroke_fraction < 1.0) || !(cfg.refractory_s >= 0.0) {
        return Err(SbsaError::InvalidInput(
            "upstroke fraction must lie in (0, 1) and the refractory period be nonnegative".into(),
        ));
    }

    let y = recording.samples();
    let n = y.len();
    let dt = recording.dt();
    let slope: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                0.0
            } else {
                (y[i + 1] - y[i - 1]) / (2.0 * dt)
            }
        })
        .collect();
    let max_slope = slope.iter().copied().fold(0.0, f64::max);
    if max_slope <= 0.0 {
        return Err(SbsaError::Segmentation("no upstrokes found".into()));
    }
    let threshold = cfg.upstroke_fraction * max_slope;
    let refractory = ((cfg.refractory_s / dt).round() as usize).max(1);

    let mut upstrokes = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if slope[i] > threshold {
            let end = (i + refractory).min(n - 1);
            let mut best = i;
            let mut j = i;
            while j < end && slope[j] > threshold {
                if slope[j] > slope[best] {
                    best = j;
                }
                j += 1;
            }
            upstrokes.push(best);
            i = best + refractory;
        } else {
            i += 1;
        }
    }

    let mut feet: Vec<usize> = Vec::with_capacity(upstrokes.len());
    let mut lo = 0;
    for &up in &upstrokes {
        let foot = (lo..=up)
            .min_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)))
            .unwrap_or(up);
        if feet.last().is_none_or(|&f| foot > f) {
            feet.push(foot);
        }
        lo = up;
    }

    let mut windows = Vec::with_capacity(feet.len());
    for w in feet.windows(2) {
        if w[1] - w[0] < MIN_BEAT_SAMPLES {
            warn!(
                "skipping {}-sample beat at t = {:.3} s",
                w[1] - w[0],
                recording.time(w[0])
            );
            continue;
        }
        windows.push(BeatWindow::new(w[0], w[1], recording.time(w[0])));
    }
    if windows.is_empty() {
        return Err(SbsaError::Segmentation(format!(
            "found {} foot/feet, need two consecutive feet",
            feet.len()
        )));
    }
    Ok(windows)
}

/// Windows between consecutive annotated feet, verbatim.
pub fn windows_from_feet(recording: &Signal, feet: &[usize]) -> Result<Vec<BeatWindow>> {
    if feet.len() < 2 {
        return Err(SbsaError::InvalidInput(
            "need at least two annotated feet".into(),
        ));
    }
    for (k, &f) in feet.iter().enumerate() {
        if f > recording.len() {
            return Err(SbsaError::InvalidInput(format!(
                "annotation {k} (sample {f}) is beyond the recording ({} samples)",
                recording.len()
            )));
        }
    }
    feet.windows(2)
        .enumerate()
        .map(|(k, w)| {
            if w[1] < w[0] + MIN_BEAT_SAMPLES {
                return Err(SbsaError::InvalidInput(format!(
                    "annotations {k} and {} (samples {} and {}) are not increasing by at least {MIN_BEAT_SAMPLES}",
                    k + 1,
                    w[0],
                    w[1]
                )));
            }
            Ok(BeatWindow::new(w[0], w[1], recording.time(w[0])))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeatConfig {
    pub chi: ChiSelectionConfig,
    /// Number of eigenvalues in the fast (systolic) share.
    pub n_s: usize,
}

impl Default for BeatConfig {
    fn default() -> Self {
        Self {
            chi: ChiSelectionConfig::default(),
            n_s: 3,
        }
    }
}

/// Indices of one beat. Pressures in mmHg, `λ` in 1/s², `pi_ms` in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatRecord {
    /// 1-based position in the recording.
    pub beat_index: usize,
    pub onset_time: f64,
    pub pi_ms: f64,
    pub sbp: f64,
    pub dbp: f64,
    pub mbp: f64,
    pub pp: f64,
    pub lambda1_abs: f64,
    /// Zero when the beat has a single bound state.
    pub lambda2_abs: f64,
    pub invariants: InvariantSet,
    pub chi_hat: f64,
    pub n_chi: usize,
    pub relative_mse: f64,
    pub converged: bool,
    /// False when `pi_ms` falls outside [`PLAUSIBLE_PI_MS`].
    pub pi_plausible: bool,
}

/// A beat's record with the decomposition behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatAnalysis {
    pub record: BeatRecord,
    pub beat: Signal,
    pub sbsa: SbsaResult,
    pub phases: PhaseSplit,
}

/// Analyzes one beat; `next_onset` (s) closes its pulse interval.
pub fn analyze_beat(
    recording: &Signal,
    w: &BeatWindow,
    next_onset: f64,
    cfg: &BeatConfig,
) -> Result<BeatRecord> {
    analyze_beat_detailed(recording, w, next_onset, cfg).map(|a| a.record)
}

pub fn analyze_beat_detailed(
    recording: &Signal,
    w: &BeatWindow,
    next_onset: f64,
    cfg: &BeatConfig,
) -> Result<BeatAnalysis> {
    if w.len() < MIN_BEAT_SAMPLES || w.end_index > recording.len() {
        return Err(SbsaError::InvalidInput(format!(
            "window [{}, {}) is shorter than {MIN_BEAT_SAMPLES} samples or outside the recording",
            w.start_index, w.end_index
        )));
    }
    let beat = recording.slice(w.start_index, w.end_index)?;
    let sbsa = select_chi(&beat, &cfg.chi)?;
    let d = &sbsa.decomposition;

    let y = beat.samples();
    let sbp = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dbp = y.iter().copied().fold(f64::INFINITY, f64::min);
    let mbp = (y.iter().sum::<f64>() / y.len() as f64).clamp(dbp, sbp);
    let pi_ms = (next_onset - w.onset_time) * 1000.0;
    let lambda = |n: usize| d.kappas().get(n).map_or(0.0, |k| k * k);
    let n_s = cfg.n_s.min(d.len());
    let invariants = invariant_set(d, &beat, n_s)?;
    let phases = split_phases(d, n_s)?;

    let record = BeatRecord {
        beat_index: 0,
        onset_time: w.onset_time,
        pi_ms,
        sbp,
        dbp,
        mbp,
        pp: sbp - dbp,
        lambda1_abs: lambda(0),
        lambda2_abs: lambda(1),
        invariants,
        chi_hat: sbsa.chi_hat,
        n_chi: d.len(),
        relative_mse: sbsa.relative_mse,
        converged: sbsa.converged,
        pi_plausible: (PLAUSIBLE_PI_MS.0..=PLAUSIBLE_PI_MS.1).contains(&pi_ms),
    };
    Ok(BeatAnalysis {
        record,
        beat,
        sbsa,
        phases,
    })
}

fn analyze_one(
    recording: &Signal,
    k: usize,
    w: &BeatWindow,
    cfg: &BeatConfig,
) -> Result<BeatAnalysis> {
    let next_onset = recording.time(w.end_index);
    let mut a =
        analyze_beat_detailed(recording, w, next_onset, cfg).map_err(|e| SbsaError::Beat {
            beat: k + 1,
            source: Box::new(e),
        })?;
    a.record.beat_index = k + 1;
    if !a.record.pi_plausible {
        warn!(
            "beat {}: pulse interval {:.1} ms outside the plausible range",
            k + 1,
            a.record.pi_ms
        );
    }
    Ok(a)
}

/// Analyzes every window in parallel; results are in window order and each
/// beat's pulse interval runs to the end of its window.
pub fn analyze_recording(
    recording: &Signal,
    windows: &[BeatWindow],
    cfg: &BeatConfig,
) -> Result<Vec<BeatAnalysis>> {
    windows
        .par_iter()
        .enumerate()
        .map(|(k, w)| analyze_one(recording, k, w, cfg))
        .collect()
}

/// Single-threaded [`analyze_recording`].
pub fn analyze_recording_serial(
    recording: &Signal,
    windows: &[BeatWindow],
    cfg: &BeatConfig,
) -> Result<Vec<BeatAnalysis>> {
    windows
        .iter()
        .enumerate()
        .map(|(k, w)| analyze_one(recording, k, w, cfg))
        .collect()
}

/// Beat quantity regressed against the next pulse interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    #[default]
    Lambda1,
    Sbp,
    Pp,
}

/// The per-beat quantities baroreflex pairing needs.
pub trait PulseIndices {
    fn beat_index(&self) -> usize;
    fn pi_ms(&self) -> f64;
    fn lambda1_abs(&self) -> f64;
    fn sbp(&self) -> f64;
    fn pp(&self) -> f64;
}

impl PulseIndices for BeatRecord {
    fn beat_index(&self) -> usize {
        self.beat_index
    }
    fn pi_ms(&self) -> f64 {
        self.pi_ms
    }
    fn lambda1_abs(&self) -> f64 {
        self.lambda1_abs
    }
    fn sbp(&self) -> f64 {
        self.sbp
    }
    fn pp(&self) -> f64 {
        self.pp
    }
}

impl Predictor {
    pub const ALL: [Predictor; 3] = [Predictor::Lambda1, Predictor::Sbp, Predictor::Pp];

    pub fn value<R: PulseIndices>(self, r: &R) -> f64 {
        match self {
            Predictor::Lambda1 => r.lambda1_abs(),
            Predictor::Sbp => r.sbp(),
            Predictor::Pp => r.pp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Predictor::Lambda1 => "lambda1",
            Predictor::Sbp => "sbp",
            Predictor::Pp => "pp",
        }
    }
}

impl std::str::FromStr for Predictor {
    type Err = SbsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lambda1" | "l1" => Ok(Predictor::Lambda1),
            "sbp" => Ok(Predictor::Sbp),
            "pp" => Ok(Predictor::Pp),
            other => Err(SbsaError::InvalidInput(format!(
                "unknown predictor {other:?} (expected lambda1, sbp or pp)"
            ))),
        }
    }
}

/// Predictor of beat `n` against the pulse interval of beat `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrsPair {
    pub x: f64,
    pub y: f64,
}

/// Lag-one pairs over consecutive records. A gap in `beat_index` breaks the
/// chain rather than pairing across it.
pub fn brs_pairs<R: PulseIndices>(records: &[R], predictor: Predictor) -> Result<Vec<BrsPair>> {
    if records.len() < 3 {
        return Err(SbsaError::InsufficientData(format!(
            "{} beat records, need at least 3",
            records.len()
        )));
    }
    Ok(records
        .windows(2)
        .filter(|w| w[1].beat_index() == w[0].beat_index() + 1)
        .map(|w| BrsPair {
            x: predictor.value(&w[0]),
            y: w[1].pi_ms(),
        })
        .collect())
}
