//! Regression, paired tests and summaries for beat-to-beat indices.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, SbsaError};
use crate::pipeline::BrsPair;

/// Ordinary least-squares fit `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// `1 − SS_res/SS_tot`, clamped to [0, 1]; zero when `y` is constant.
    pub r_squared: f64,
    pub n: usize,
    /// Standard error of the slope (zero for an exact fit).
    pub slope_std_error: f64,
}

pub fn linear_regression(pairs: &[BrsPair]) -> Result<RegressionResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().map(|p| (p.x, p.y)).unzip();
    linear_regression_xy(&x, &y)
}

pub fn linear_regression_xy(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(SbsaError::InvalidInput(format!(
            "{} x values but {} y values",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(SbsaError::InsufficientData(format!(
            "{n} points, need at least 3"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(SbsaError::InvalidInput(
            "regression data must be finite".into(),
        ));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sxx <= nf * (4.0 * f64::EPSILON * scale).powi(2) {
        return Err(SbsaError::Degenerate("x values have zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let slope_std_error = (ss_res / (nf - 2.0) / sxx).sqrt();
    Ok(RegressionResult {
        slope,
        intercept,
        r_squared,
        n,
        slope_std_error,
    })
}

/// Null distribution used for the signed-rank p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    /// Exact up to [`EXACT_WILCOXON_MAX_N`] nonzero differences, normal above.
    #[default]
    Auto,
    Exact,
    Normal,
}

pub const EXACT_WILCOXON_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    /// Rank sum of the positive differences `after − before`.
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    /// Pairs with a nonzero difference.
    pub n_effective: usize,
    pub exact: bool,
}

/// Two-sided Wilcoxon signed-rank test on `after − before`. Zero differences
/// are dropped and tied magnitudes share their mean rank.
pub fn wilcoxon_signed_rank(before: &[f64], after: &[f64]) -> Result<PairedTestResult> {
    wilcoxon_signed_rank_with(before, after, WilcoxonMethod::Auto)
}

pub fn wilcoxon_signed_rank_with(
    before: &[f64],
    after: &[f64],
    method: WilcoxonMethod,
) -> Result<PairedTestResult> {
    if before.len() != after.len() {
        return Err(SbsaError::InvalidInput(format!(
            "paired samples differ in length ({} vs {})",
            before.len(),
            after.len()
        )));
    }
    let mut diffs: Vec<f64> = before
        .iter()
        .zip(after)
        .map(|(b, a)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(SbsaError::InvalidInput(
            "paired samples must be finite".into(),
        ));
    }
    let n = diffs.len();
    if n < 5 {
        return Err(SbsaError::InsufficientData(format!(
            "{n} nonzero paired differences, need at least 5"
        )));
    }
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    // Doubled ranks are integers even when ties produce half ranks.
    let mut ranks2 = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let shared = (i + 1 + j + 1) as u64; // twice the mean of ranks i+1..=j+1
        ranks2[i..=j].iter_mut().for_each(|r| *r = shared);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w2: u64 = diffs
        .iter()
        .zip(&ranks2)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    let exact = match method {
        WilcoxonMethod::Auto => n <= EXACT_WILCOXON_MAX_N,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    let p_value = if exact {
        exact_p(&ranks2, w2)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
            let std = Normal::standard();
            2.0 * (1.0 - std.cdf(z))
        }
    };
    Ok(PairedTestResult {
        statistic,
        p_value: p_value.clamp(f64::MIN_POSITIVE, 1.0),
        n_effective: n,
        exact,
    })
}

/// Two-sided p from the distribution of the positive rank sum over all `2ⁿ`
/// equally likely sign assignments.
fn exact_p(ranks2: &[u64], w2: u64) -> f64 {
    let total: u64 = ranks2.iter().sum();
    // counts[s]: number of sign assignments whose positive doubled-rank sum is s.
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks2.len() as i32);
    let w2 = w2 as usize;
    let lower: f64 = counts[..=w2].iter().sum();
    let upper: f64 = counts[w2..].iter().sum();
    (2.0 * lower.min(upper) / all).min(1.0)
}

/// Mean ± standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub sem: f64,
    pub n: usize,
}

/// Summary statistics. Values are summed in sorted order, so any permutation
/// of the input gives bit-identical results.
pub fn summarize(values: &[f64]) -> Result<SummaryStat> {
    let n = values.len();
    if n < 2 {
        return Err(SbsaError::InsufficientData(format!(
            "{n} values, need at least 2"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SbsaError::InvalidInput("values must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mean = sorted.iter().sum::<f64>() / nf;
    let mut dev: Vec<f64> = sorted.iter().map(|v| (v - mean) * (v - mean)).collect();
    dev.sort_by(f64::total_cmp);
    let var = dev.iter().sum::<f64>() / (nf - 1.0);
    Ok(SummaryStat {
        mean,
        sem: (var / nf).sqrt(),
        n,
    })
}

/// Significance marks used in reports: `***` for p ≤ 0.001, `**` for
/// p ≤ 0.01, `NS` otherwise.
pub fn significance_stars(p: f64) -> &'static str {
    if p <= 0.001 {
        "***"
    } else if p <= 0.01 {
        "**"
    } else {
        "NS"
    }
}
