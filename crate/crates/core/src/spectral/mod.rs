//! Discretized Schrödinger operator `H(−χy) = −d²/dt² − χy` and its negative
//! spectrum.
//!
//! The operator uses the three-point second difference on the signal grid with
//! Dirichlet conditions just outside the window, so the signal is treated as a
//! compactly supported well. Shallow bound states whose tails reach the window
//! edges are raised by the box; pad the signal with zeros to resolve them.
//! Only eigenvalues below zero are ever computed.

pub mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbsaError};
use crate::signal::Signal;

/// Relative threshold (in units of `2/dt²`) below which an eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

/// Relative κ separation under which eigenvectors are always re-orthogonalized.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Eigenvalue gap, as a fraction of the operator norm, inside which computed
/// eigenvectors are orthogonalized against each other during inverse iteration.
const CLUSTER_GAP: f64 = 1e-3;

/// Largest acceptable relative eigen-residual before reporting failure.
const MAX_RELATIVE_RESIDUAL: f64 = 1e-8;

/// Symmetric tridiagonal matrix of `H(−χy)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    diagonal: Vec<f64>,
    off_diagonal: Vec<f64>,
    dt: f64,
    t0: f64,
    chi: f64,
}

impl TridiagonalOperator {
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Eigenvalues at or above `-zero_threshold` are treated as non-negative.
    pub fn zero_threshold(&self) -> f64 {
        ZERO_EIGENVALUE_TOL * 2.0 / (self.dt * self.dt)
    }

    /// Number of eigenvalues strictly below `-zero_threshold`.
    pub fn negative_count(&self) -> usize {
        tridiag::sturm_count(&self.diagonal, &self.off_diagonal, -self.zero_threshold())
    }

    /// Negative eigenvalues, most negative first.
    pub fn negative_eigenvalues(&self) -> Vec<f64> {
        tridiag::eigenvalues_below(&self.diagonal, &self.off_diagonal, -self.zero_threshold())
    }
}

/// Builds the three-point discretization of `H(−χy)`.
///
/// Negative samples are passed through unchanged; sign handling belongs to
/// the caller.
pub fn discretize_operator(y: &Signal, chi: f64) -> Result<TridiagonalOperator> {
    if !chi.is_finite() {
        return Err(SbsaError::InvalidInput(format!(
            "chi = {chi} is not finite"
        )));
    }
    if chi <= 0.0 {
        return Err(SbsaError::Domain(format!(
            "chi must be positive, got {chi}"
        )));
    }
    let dt = y.dt();
    let inv_dt2 = 1.0 / (dt * dt);
    let diagonal: Vec<f64> = y
        .samples()
        .iter()
        .map(|&v| 2.0 * inv_dt2 - chi * v)
        .collect();
    if let Some(i) = diagonal.iter().position(|v| !v.is_finite()) {
        return Err(SbsaError::InvalidInput(format!(
            "operator diagonal overflows at sample {i} (chi·y too large)"
        )));
    }
    Ok(TridiagonalOperator {
        off_diagonal: vec![-inv_dt2; diagonal.len() - 1],
        diagonal,
        dt,
        t0: y.t0(),
        chi,
    })
}

/// Bound states of `H(−χy)`: `κ₁ ≥ κ₂ ≥ … > 0` with `λₙ = −κₙ²` and the
/// grid-sampled eigenfunctions, normalized so `Σψ² dt = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    chi: f64,
    kappas: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    dt: f64,
    t0: f64,
    signal_length: usize,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from explicit eigenpairs, checking shapes and
    /// ordering. Eigenfunctions are taken as given (no renormalization).
    pub fn from_parts(
        chi: f64,
        kappas: Vec<f64>,
        eigenfunctions: Vec<Vec<f64>>,
        dt: f64,
        t0: f64,
    ) -> Result<Self> {
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(SbsaError::Domain(format!(
                "chi must be positive, got {chi}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SbsaError::InvalidInput(format!("invalid step {dt}")));
        }
        if kappas.len() != eigenfunctions.len() {
            return Err(SbsaError::InvalidInput(format!(
                "{} kappas but {} eigenfunctions",
                kappas.len(),
                eigenfunctions.len()
            )));
        }
        if kappas.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(SbsaError::Domain(
                "kappas must be positive and finite".into(),
            ));
        }
        if kappas.windows(2).any(|w| w[0] < w[1]) {
            return Err(SbsaError::Domain("kappas must be sorted descending".into()));
        }
        let signal_length = eigenfunctions.first().map_or(0, Vec::len);
        if eigenfunctions.iter().any(|f| f.len() != signal_length) {
            return Err(SbsaError::InvalidInput(
                "eigenfunctions differ in length".into(),
            ));
        }
        Ok(Self {
            chi,
            kappas,
            eigenfunctions,
            dt,
            t0,
            signal_length,
        })
    }

    fn empty(op: &TridiagonalOperator) -> Self {
        Self {
            chi: op.chi,
            kappas: Vec::new(),
            eigenfunctions: Vec::new(),
            dt: op.dt,
            t0: op.t0,
            signal_length: op.len(),
        }
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    /// `λₙ = −κₙ²`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.kappas.iter().map(|k| -k * k).collect()
    }

    pub fn eigenfunctions(&self) -> &[Vec<f64>] {
        &self.eigenfunctions
    }

    pub fn eigenfunction(&self, n: usize) -> Option<&[f64]> {
        self.eigenfunctions.get(n).map(Vec::as_slice)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    /// `N_χ`, the number of bound states.
    pub fn len(&self) -> usize {
        self.kappas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappas.is_empty()
    }

    /// Discrete inner product `Σ ψₘψₙ dt`.
    pub fn inner_product(&self, m: usize, n: usize) -> f64 {
        self.eigenfunctions[m]
            .iter()
            .zip(&self.eigenfunctions[n])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.dt
    }
}

/// All bound states of the discretized operator.
///
/// Eigenvalues come from Sturm bisection, eigenvectors from inverse iteration
/// with Gram–Schmidt inside eigenvalue clusters. Each eigenfunction is scaled
/// to `Σψ² dt = 1` and its largest-magnitude entry made positive.
pub fn negative_spectrum(op: &TridiagonalOperator) -> Result<SpectralDecomposition> {
    let lambdas = op.negative_eigenvalues();
    if lambdas.is_empty() {
        return Ok(SpectralDecomposition::empty(op));
    }
    let (diag, off) = (op.diagonal(), op.off_diagonal());
    let norm = tridiag::norm_inf(diag, off);
    let kappas: Vec<f64> = lambdas.iter().map(|l| (-l).sqrt()).collect();

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    for (n, &lambda) in lambdas.iter().enumerate() {
        let cluster: Vec<&[f64]> = vectors
            .iter()
            .zip(&lambdas)
            .zip(&kappas)
            .filter(|((_, &l), &k)| {
                (lambda - l).abs() <= CLUSTER_GAP * norm
                    || (kappas[n] - k).abs() <= DEGENERACY_TOL * k
            })
            .map(|((v, _), _)| v.as_slice())
            .collect();
        let mut result = tridiag::inverse_iteration(diag, off, lambda, &cluster);
        if !result.vector.iter().all(|v| v.is_finite()) || result.residual > MAX_RELATIVE_RESIDUAL {
            return Err(SbsaError::Numeric(format!(
                "inverse iteration for eigenvalue {n} (lambda = {lambda:e}) stalled after {} iterations, relative residual {:e}",
                result.iterations, result.residual
            )));
        }
        // A second Gram–Schmidt pass restores orthogonality lost to rounding
        // in the first.
        tridiag::orthogonalize(&mut result.vector, &cluster);
        let norm2 = result.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        result.vector.iter_mut().for_each(|v| *v /= norm2);
        vectors.push(result.vector);
    }

    let scale = 1.0 / op.dt.sqrt();
    let eigenfunctions = vectors
        .into_iter()
        .map(|mut v| {
            let peak = v.iter().copied().fold(
                0.0f64,
                |best, x| if x.abs() > best.abs() { x } else { best },
            );
            let s = if peak < 0.0 { -scale } else { scale };
            v.iter_mut().for_each(|x| *x *= s);
            v
        })
        .collect();

    Ok(SpectralDecomposition {
        chi: op.chi,
        kappas,
        eigenfunctions,
        dt: op.dt,
        t0: op.t0,
        signal_length: op.len(),
    })
}

/// `N_χ` by Sturm count, without computing eigenvectors.
pub fn count_negative_eigenvalues(y: &Signal, chi: f64) -> Result<usize> {
    Ok(discretize_operator(y, chi)?.negative_count())
}

/// Convenience wrapper: discretize then decompose.
pub fn decompose(y: &Signal, chi: f64) -> Result<SpectralDecomposition> {
    negative_spectrum(&discretize_operator(y, chi)?)
}
