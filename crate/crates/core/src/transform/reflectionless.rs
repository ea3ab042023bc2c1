//! Exact N-soliton wells from discrete scattering data.
//!
//! For bound-state speeds `κ` and right norming constants `c`, the
//! reflectionless potential is `V = −2 ∂ₓ² log det(I + A)` with
//! `Aₘₙ(x) = cₘcₙ/(κₘ+κₙ) · exp((κₘ+κₙ)x)`. The routine here returns the
//! nonnegative well `−V` sampled on a grid.

use crate::error::{Result, SbsaError};
use crate::signal::{Grid, Signal};

/// Ratio between the signal step and the finite-difference step used for
/// the second derivative.
pub const REFINEMENT: usize = 8;

/// `log det(I + A(x))`, evaluated without forming `exp((κₘ+κₙ)x)`.
///
/// With `dₙ = cₙ e^{κₙx}` and `C = [1/(κₘ+κₙ)]`, `I + A = D C D + I`. Writing
/// `sₙ = max(1, dₙ)` and factoring `S` out of both sides leaves the SPD matrix
/// `S⁻² + (D/S) C (D/S)` whose entries are all bounded.
pub fn log_det_reflectionless(kappas: &[f64], norming: &[f64], x: f64) -> f64 {
    let n = kappas.len();
    let log_d: Vec<f64> = kappas
        .iter()
        .zip(norming)
        .map(|(k, c)| k * x + c.ln())
        .collect();
    let log_s: Vec<f64> = log_d.iter().map(|&l| l.max(0.0)).collect();
    let ratio: Vec<f64> = log_d.iter().map(|&l| l.min(0.0).exp()).collect();

    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = ratio[i] * ratio[j] / (kappas[i] + kappas[j]);
        }
        m[i * n + i] += (-2.0 * log_s[i]).exp();
    }

    // Cholesky; the matrix is SPD so pivots stay positive.
    let mut log_det = 0.0;
    for j in 0..n {
        let mut diag = m[j * n + j];
        for k in 0..j {
            diag -= m[j * n + k] * m[j * n + k];
        }
        let l_jj = diag.sqrt();
        log_det += 2.0 * l_jj.ln();
        m[j * n + j] = l_jj;
        for i in (j + 1)..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = v / l_jj;
        }
    }
    log_det + 2.0 * log_s.iter().sum::<f64>()
}

/// Norming constants `cₙ = √(2κₙ)`, which center each soliton, taken
/// alone, at the origin.
pub fn centered_norming(kappas: &[f64]) -> Vec<f64> {
    kappas.iter().map(|k| (2.0 * k).sqrt()).collect()
}

/// Samples the reflectionless well `2 ∂ₓ² log det(I + A(x))` on `grid`.
///
/// `kappas` must be strictly descending and positive; `norming` holds one
/// positive constant per κ.
pub fn synthesize_reflectionless(kappas: &[f64], norming: &[f64], grid: Grid) -> Result<Signal> {
    if kappas.is_empty() {
        return Err(SbsaError::Domain("at least one kappa is required".into()));
    }
    if kappas.len() != norming.len() {
        return Err(SbsaError::InvalidInput(format!(
            "{} kappas but {} norming constants",
            kappas.len(),
            norming.len()
        )));
    }
    if kappas.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(SbsaError::Domain(
            "kappas must be positive and finite".into(),
        ));
    }
    if kappas.windows(2).any(|w| w[0] <= w[1]) {
        return Err(SbsaError::Domain(
            "kappas must be strictly descending".into(),
        ));
    }
    if norming.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(SbsaError::Domain(
            "norming constants must be positive and finite".into(),
        ));
    }
    if !(grid.dt > 0.0 && grid.dt.is_finite()) {
        return Err(SbsaError::InvalidInput(format!(
            "invalid grid step {}",
            grid.dt
        )));
    }

    let h = grid.dt / REFINEMENT as f64;
    let f = |x: f64| log_det_reflectionless(kappas, norming, x);
    let samples = (0..grid.len)
        .map(|i| {
            let x = grid.time(i);
            let second = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            (2.0 * second).max(0.0)
        })
        .collect();
    Signal::new(samples, grid.dt, grid.t0)
}
