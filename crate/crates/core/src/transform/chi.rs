//! Choice of the well depth `χ̂`.

use serde::{Deserialize, Serialize};

use super::reconstruct;
use crate::error::{Result, SbsaError};
use crate::signal::{relative_mse, Signal};
use crate::spectral::{count_negative_eigenvalues, decompose, SpectralDecomposition};

/// How `χ̂` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ChiMode {
    /// Smallest `χ` whose operator has exactly `target_n` bound states.
    FixedComponentCount { target_n: usize },
    /// First `χ` on a geometric sweep whose reconstruction reaches the
    /// relative squared error `mse_tolerance`.
    ErrorTarget { mse_tolerance: f64 },
}

impl Default for ChiMode {
    fn default() -> Self {
        ChiMode::ErrorTarget {
            mse_tolerance: ChiSelectionConfig::DEFAULT_MSE_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChiSelectionConfig {
    #[serde(flatten)]
    pub mode: ChiMode,
    /// Lower end of the search bracket, in 1/(signal unit · s²).
    pub chi_min: f64,
    pub chi_max: f64,
    /// Step budget of the error-target sweep.
    pub max_iterations: usize,
    /// Ratio between consecutive `χ` of the error-target sweep.
    pub growth: f64,
    /// Relative bracket width at which the component-count bisection stops.
    pub search_tolerance: f64,
}

impl ChiSelectionConfig {
    pub const DEFAULT_MSE_TOLERANCE: f64 = 1e-3;
    pub const DEFAULT_TARGET_N: usize = 7;
    /// Decades the component-count bracket may be widened on either side.
    const MAX_BRACKET_EXPANSIONS: usize = 12;

    pub fn fixed_count(target_n: usize) -> Self {
        Self {
            mode: ChiMode::FixedComponentCount { target_n },
            ..Self::default()
        }
    }

    pub fn error_target(mse_tolerance: f64) -> Self {
        Self {
            mode: ChiMode::ErrorTarget { mse_tolerance },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi_min > 0.0 && self.chi_max > self.chi_min && self.chi_max.is_finite()) {
            return Err(SbsaError::Domain(format!(
                "chi bracket [{}, {}] must satisfy 0 < chi_min < chi_max",
                self.chi_min, self.chi_max
            )));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(SbsaError::Domain(format!(
                "growth {} must exceed 1",
                self.growth
            )));
        }
        if !(self.search_tolerance > 0.0 && self.search_tolerance < 1.0) {
            return Err(SbsaError::Domain(format!(
                "search tolerance {} must lie in (0, 1)",
                self.search_tolerance
            )));
        }
        match self.mode {
            ChiMode::FixedComponentCount { target_n } if target_n == 0 => {
                Err(SbsaError::Domain("target_n must be at least 1".into()))
            }
            ChiMode::ErrorTarget { mse_tolerance } if !(mse_tolerance > 0.0) => Err(
                SbsaError::Domain(format!("mse tolerance {mse_tolerance} must be positive")),
            ),
            _ => Ok(()),
        }
    }
}

impl Default for ChiSelectionConfig {
    fn default() -> Self {
        Self {
            mode: ChiMode::default(),
            chi_min: 1e-2,
            chi_max: 1e6,
            max_iterations: 400,
            growth: 1.05,
            search_tolerance: 1e-9,
        }
    }
}

/// Decomposition at the selected `χ̂` together with its reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsaResult {
    pub decomposition: SpectralDecomposition,
    pub chi_hat: f64,
    pub reconstruction: Signal,
    /// `Σ(y − y_χ)² / Σy²` on the grid.
    pub relative_mse: f64,
    /// False when an error target was not met; the result is then the best
    /// reconstruction seen.
    pub converged: bool,
    /// Number of `χ` values evaluated.
    pub iterations: usize,
}

impl SbsaResult {
    fn at(y: &Signal, chi: f64, iterations: usize, converged: bool) -> Result<Self> {
        let decomposition = decompose(y, chi)?;
        let reconstruction = reconstruct(&decomposition);
        let relative_mse = relative_mse(y.samples(), reconstruction.samples());
        Ok(Self {
            decomposition,
            chi_hat: chi,
            reconstruction,
            relative_mse,
            converged,
            iterations,
        })
    }

    pub fn n_chi(&self) -> usize {
        self.decomposition.len()
    }
}

/// Chooses `χ̂` for a nonnegative signal and decomposes it there.
pub fn select_chi(y: &Signal, cfg: &ChiSelectionConfig) -> Result<SbsaResult> {
    cfg.validate()?;
    if let Some(i) = y.samples().iter().position(|&v| v < 0.0) {
        return Err(SbsaError::Domain(format!(
            "signal must be nonnegative; sample {i} is {}",
            y.samples()[i]
        )));
    }
    if y.samples().iter().all(|&v| v == 0.0) {
        return Err(SbsaError::NoBoundState);
    }
    match cfg.mode {
        ChiMode::FixedComponentCount { target_n } => fixed_count(y, cfg, target_n),
        ChiMode::ErrorTarget { mse_tolerance } => error_target(y, cfg, mse_tolerance),
    }
}

fn fixed_count(y: &Signal, cfg: &ChiSelectionConfig, target: usize) -> Result<SbsaResult> {
    let count = |chi: f64| count_negative_eigenvalues(y, chi);
    let (mut lo, mut hi) = (cfg.chi_min, cfg.chi_max);
    let (mut n_lo, mut n_hi) = (count(lo)?, count(hi)?);
    let mut evaluations = 2;

    let mut expansions = 0;
    while n_lo >= target && expansions < ChiSelectionConfig::MAX_BRACKET_EXPANSIONS {
        hi = lo;
        n_hi = n_lo;
        lo /= 10.0;
        n_lo = count(lo)?;
        evaluations += 1;
        expansions += 1;
    }
    expansions = 0;
    while n_hi < target && expansions < ChiSelectionConfig::MAX_BRACKET_EXPANSIONS {
        lo = hi;
        n_lo = n_hi;
        hi *= 10.0;
        n_hi = count(hi)?;
        evaluations += 1;
        expansions += 1;
    }
    if n_lo >= target || n_hi < target {
        return Err(SbsaError::Bracket {
            target,
            achieved_min: n_lo,
            achieved_max: n_hi,
            chi_min: lo,
            chi_max: hi,
        });
    }

    // Invariant: N(lo) < target <= N(hi). Bisect in log space.
    while hi - lo > cfg.search_tolerance * hi {
        let mid = (lo * hi).sqrt();
        let mid = if mid > lo && mid < hi {
            mid
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let n_mid = count(mid)?;
        evaluations += 1;
        if n_mid >= target {
            hi = mid;
            n_hi = n_mid;
        } else {
            lo = mid;
            n_lo = n_mid;
        }
    }
    if n_hi != target {
        return Err(SbsaError::Bracket {
            target,
            achieved_min: n_lo,
            achieved_max: n_hi,
            chi_min: lo,
            chi_max: hi,
        });
    }
    SbsaResult::at(y, hi, evaluations, true)
}

fn error_target(y: &Signal, cfg: &ChiSelectionConfig, tolerance: f64) -> Result<SbsaResult> {
    let mut best: Option<SbsaResult> = None;
    let mut chi = cfg.chi_min;
    let mut iterations = 0;
    while iterations < cfg.max_iterations && chi <= cfg.chi_max {
        iterations += 1;
        // Without bound states the reconstruction is zero; skip the eigensolve.
        if count_negative_eigenvalues(y, chi)? > 0 {
            let mut candidate = SbsaResult::at(y, chi, iterations, false)?;
            if candidate.relative_mse <= tolerance {
                candidate.converged = true;
                return Ok(candidate);
            }
            if best
                .as_ref()
                .is_none_or(|b| candidate.relative_mse < b.relative_mse)
            {
                best = Some(candidate);
            }
        }
        chi *= cfg.growth;
    }
    match best {
        Some(mut b) => {
            log::warn!(
                "mse target {tolerance:e} not reached after {iterations} steps; best {:e} at chi = {}",
                b.relative_mse,
                b.chi_hat
            );
            b.iterations = iterations;
            Ok(b)
        }
        None => Err(SbsaError::NoBoundState),
    }
}
