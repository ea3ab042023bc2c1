//! Soliton decomposition of a positive signal.
//!
//! A decomposition at well depth `χ` turns into the reconstruction
//! `y_χ = (4/χ) Σ κₙ ψₙ²`, one soliton per bound state. Terms are snapped onto
//! a common binary fixed-point quantum before summation, so every partial sum
//! (single components, the fast/slow split, the full reconstruction) is exact
//! and independent of summation order.

mod chi;
mod reflectionless;

pub use chi::{select_chi, ChiMode, ChiSelectionConfig, SbsaResult};
pub use reflectionless::{
    centered_norming, log_det_reflectionless, synthesize_reflectionless, REFINEMENT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbsaError};
use crate::signal::Signal;
use crate::spectral::SpectralDecomposition;

/// Per-soliton terms `(4/χ) κₙ ψₙ²`, quantized to a shared power-of-two step.
///
/// The step is chosen so that any sum of terms stays below 2⁵² steps, which
/// makes all such sums exactly representable.
fn soliton_terms(d: &SpectralDecomposition) -> Vec<Vec<f64>> {
    let scale = 4.0 / d.chi();
    let raw: Vec<Vec<f64>> = d
        .kappas()
        .iter()
        .zip(d.eigenfunctions())
        .map(|(&k, psi)| psi.iter().map(|p| scale * k * p * p).collect())
        .collect();
    let mut peak = 0.0f64;
    for i in 0..d.signal_length() {
        peak = peak.max(raw.iter().map(|t| t[i]).sum::<f64>());
    }
    if peak == 0.0 || !peak.is_finite() {
        return raw;
    }
    let exponent = peak.log2().ceil() as i32 + 1;
    let quantum = 2f64.powi(exponent - 51);
    raw.into_iter()
        .map(|t| {
            t.into_iter()
                .map(|v| (v / quantum).round() * quantum)
                .collect()
        })
        .collect()
}

fn signal_for(d: &SpectralDecomposition, samples: Vec<f64>) -> Signal {
    Signal::new(samples, d.dt(), d.t0()).expect("decomposition grid is a valid signal grid")
}

fn sum_terms<'a>(terms: impl Iterator<Item = &'a Vec<f64>>, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for t in terms {
        out.iter_mut().zip(t).for_each(|(o, v)| *o += v);
    }
    out
}

/// `y_χ[i] = (4/χ) Σₙ κₙ ψₙ[i]²`; all zeros for an empty decomposition.
pub fn reconstruct(d: &SpectralDecomposition) -> Signal {
    let terms = soliton_terms(d);
    signal_for(d, sum_terms(terms.iter(), d.signal_length()))
}

/// The single soliton `(4/χ) κₙ ψₙ²`, with `n` counted from 1.
pub fn soliton_component(d: &SpectralDecomposition, n: usize) -> Result<Signal> {
    if n == 0 || n > d.len() {
        return Err(SbsaError::index(n, 1, d.len()));
    }
    let mut terms = soliton_terms(d);
    Ok(signal_for(d, terms.swap_remove(n - 1)))
}

/// Fast (systolic) and slow (diastolic) parts of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSplit {
    /// Sum of the `n_s` solitons with the largest κ.
    pub systolic: Signal,
    /// Sum of the remaining solitons.
    pub diastolic: Signal,
    pub n_s: usize,
}

impl PhaseSplit {
    /// Sample-wise `systolic + diastolic`.
    pub fn total(&self) -> Signal {
        let s = self
            .systolic
            .samples()
            .iter()
            .zip(self.diastolic.samples())
            .map(|(a, b)| a + b)
            .collect();
        self.systolic.with_samples(s)
    }
}

/// Splits the reconstruction after the first `n_s` (largest κ) solitons.
pub fn split_phases(d: &SpectralDecomposition, n_s: usize) -> Result<PhaseSplit> {
    if n_s > d.len() {
        return Err(SbsaError::index(n_s, 0, d.len()));
    }
    let terms = soliton_terms(d);
    let len = d.signal_length();
    Ok(PhaseSplit {
        systolic: signal_for(d, sum_terms(terms[..n_s].iter(), len)),
        diastolic: signal_for(d, sum_terms(terms[n_s..].iter(), len)),
        n_s,
    })
}
