//! Scattering invariants of a decomposition.
//!
//! The first two invariants are Riesz means of the negative spectrum,
//! `INV₁(λ) = (4/χ) S_{1/2,λ}` and `INV₂(λ) = 16/(3χ²) S_{3/2,λ}`, estimating
//! `∫y` and `∫y²`. Splitting the spectrum at a cutoff eigenvalue gives the
//! fast (systolic) and slow (diastolic) shares. The gap between each estimate
//! and the directly integrated value is the continuous-spectrum contribution.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Result, SbsaError};
use crate::signal::Signal;
use crate::spectral::SpectralDecomposition;

/// `Σ_{λₙ ≤ cut} |λₙ|^γ` with `λₙ = −κₙ²`.
pub fn riesz_mean(d: &SpectralDecomposition, gamma: f64, lambda_cut: f64) -> f64 {
    d.kappas()
        .iter()
        .filter(|&&k| -k * k <= lambda_cut)
        .map(|&k| (k * k).powf(gamma))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    pub inv1_global: f64,
    pub inv1_systolic: f64,
    pub inv1_diastolic: f64,
    pub inv2_global: f64,
    pub inv2_systolic: f64,
    pub inv2_diastolic: f64,
    /// Trapezoid integral of `y`.
    pub direct_inv1: f64,
    /// Trapezoid integral of `y²`.
    pub direct_inv2: f64,
    /// `direct_inv1 − inv1_global`, nonpositive up to discretization error.
    pub residual1: f64,
    /// `direct_inv2 − inv2_global`, nonnegative up to discretization error.
    pub residual2: f64,
    /// Number of eigenvalues admitted by the systolic cutoff (grows past the
    /// requested count only when eigenvalues tie at the cutoff).
    pub n_s: usize,
}

/// Global, systolic and diastolic invariants of `d`, with the systolic cutoff
/// at `λ_{n_s}` (inclusive).
pub fn invariant_set(d: &SpectralDecomposition, y: &Signal, n_s: usize) -> Result<InvariantSet> {
    if n_s > d.len() {
        return Err(SbsaError::index(n_s, 0, d.len()));
    }
    if y.len() != d.signal_length() {
        return Err(SbsaError::InvalidInput(format!(
            "signal has {} samples but the decomposition grid has {}",
            y.len(),
            d.signal_length()
        )));
    }
    let kappas = d.kappas();
    let admitted = if n_s == 0 {
        0
    } else {
        let cut = -kappas[n_s - 1] * kappas[n_s - 1];
        kappas.iter().take_while(|&&k| -k * k <= cut).count()
    };
    let chi = d.chi();
    let c1 = 4.0 / chi;
    let c2 = 16.0 / (3.0 * chi * chi);
    let (fast, slow) = kappas.split_at(admitted);
    let s1 = |ks: &[f64]| ks.iter().sum::<f64>();
    let s3 = |ks: &[f64]| ks.iter().map(|k| k * k * k).sum::<f64>();

    let inv1_systolic = c1 * s1(fast);
    let inv1_diastolic = c1 * s1(slow);
    let inv2_systolic = c2 * s3(fast);
    let inv2_diastolic = c2 * s3(slow);
    let inv1_global = inv1_systolic + inv1_diastolic;
    let inv2_global = inv2_systolic + inv2_diastolic;
    let direct_inv1 = y.integral();
    let direct_inv2 = y.integrate_with(|v| v * v);
    Ok(InvariantSet {
        inv1_global,
        inv1_systolic,
        inv1_diastolic,
        inv2_global,
        inv2_systolic,
        inv2_diastolic,
        direct_inv1,
        direct_inv2,
        residual1: direct_inv1 - inv1_global,
        residual2: direct_inv2 - inv2_global,
        n_s: admitted,
    })
}

/// Classical constant `L_γ = Γ(γ+1) / (√(4π) Γ(γ+3/2))`.
pub fn lieb_thirring_constant(gamma_exp: f64) -> f64 {
    if gamma_exp == 0.5 {
        0.25
    } else if gamma_exp == 1.5 {
        3.0 / 16.0
    } else {
        gamma(gamma_exp + 1.0) / ((4.0 * std::f64::consts::PI).sqrt() * gamma(gamma_exp + 1.5))
    }
}

/// Semiclassical limit `L_γ ∫ y^{γ+1/2}` of `S_{γ,0}(χy)/χ^{γ+1/2}`.
pub fn semiclassical_reference(y: &Signal, gamma_exp: f64) -> Result<f64> {
    if !(gamma_exp >= 0.0 && gamma_exp.is_finite()) {
        return Err(SbsaError::Domain(format!(
            "gamma = {gamma_exp} must be nonnegative"
        )));
    }
    if let Some(i) = y.samples().iter().position(|&v| v < 0.0) {
        return Err(SbsaError::Domain(format!(
            "signal must be nonnegative; sample {i} is {}",
            y.samples()[i]
        )));
    }
    let p = gamma_exp + 0.5;
    Ok(lieb_thirring_constant(gamma_exp) * y.integrate_with(|v| v.powf(p)))
}
