//! Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for
//! eigenvalues and inverse iteration for eigenvectors.
//!
//! Matrices are described by `diag` (length n) and `off` (length n − 1), the
//! shared sub/super diagonal.

/// Upper bound on bisection steps; 2^-200 of any Gershgorin width is below
/// machine resolution.
const MAX_BISECTIONS: usize = 200;
const MAX_INVERSE_ITERATIONS: usize = 12;

/// Smallest pivot magnitude allowed in the LDLᵀ recurrence.
fn pivot_floor(off: &[f64]) -> f64 {
    let max_sq = off.iter().fold(1.0f64, |m, e| m.max(e * e));
    f64::MIN_POSITIVE * max_sq
}

/// Number of eigenvalues strictly less than `x`.
///
/// Counts negative pivots of the LDLᵀ factorization of `T − xI`; zero pivots
/// are nudged to `-pivmin` as in LAPACK's `dstebz`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let pivmin = pivot_floor(off);
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing the whole spectrum.
pub fn gershgorin_bounds(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// Infinity norm of the matrix.
pub fn norm_inf(diag: &[f64], off: &[f64]) -> f64 {
    let (lo, hi) = gershgorin_bounds(diag, off);
    lo.abs().max(hi.abs())
}

/// The `k`-th smallest eigenvalue (0-based) located by bisection inside
/// `[lo, hi]`, which must satisfy `count(lo) <= k < count(hi)`.
pub fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize, lo: f64, hi: f64) -> f64 {
    let tol_abs = 2.0 * f64::EPSILON * norm_inf(diag, off).max(f64::MIN_POSITIVE);
    bisect_by(|x| sturm_count(diag, off, x), k, lo, hi, tol_abs)
}

/// Bisection on any monotone eigenvalue-counting function.
fn bisect_by(
    count: impl Fn(f64) -> usize,
    k: usize,
    mut lo: f64,
    mut hi: f64,
    tol_abs: f64,
) -> f64 {
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol_abs.max(2.0 * f64::EPSILON * mid.abs()) || mid <= lo || mid >= hi {
            break;
        }
        if count(mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues strictly below `upper`, ascending.
pub fn eigenvalues_below(diag: &[f64], off: &[f64], upper: f64) -> Vec<f64> {
    let (lo, _) = gershgorin_bounds(diag, off);
    let tol_abs = 2.0 * f64::EPSILON * norm_inf(diag, off).max(f64::MIN_POSITIVE);
    eigenvalues_below_by(|x| sturm_count(diag, off, x), lo, upper, tol_abs)
}

/// Every value counted by `count` below `upper`, ascending. `lo` must lie
/// below all of them.
fn eigenvalues_below_by(
    count: impl Fn(f64) -> usize,
    lo: f64,
    upper: f64,
    tol_abs: f64,
) -> Vec<f64> {
    let total = count(upper);
    if total == 0 {
        return Vec::new();
    }
    let lo = lo - 1.0 - lo.abs() * f64::EPSILON * 4.0;
    let mut values = Vec::with_capacity(total);
    let mut floor = lo;
    for k in 0..total {
        // The previous eigenvalue is a valid lower bracket unless rounding put
        // it above the k-th one.
        if count(floor) > k {
            floor = lo;
        }
        let v = bisect_by(&count, k, floor, upper, tol_abs);
        values.push(v);
        floor = v - 4.0 * f64::EPSILON * v.abs().max(1.0);
    }
    values
}

/// Every eigenvalue of the matrix, ascending.
pub fn all_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let (_, hi) = gershgorin_bounds(diag, off);
    eigenvalues_below(diag, off, hi + 1.0 + hi.abs() * f64::EPSILON * 4.0)
}

/// LU factorization with partial pivoting of `T − shift·I`, in the layout of
/// LAPACK's `dgttrf`.
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut dl = off.to_vec();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Modified Gram–Schmidt against an orthonormal set.
pub(crate) fn orthogonalize(v: &mut [f64], basis: &[&[f64]]) {
    for q in basis {
        let p = dot(v, q);
        v.iter_mut().zip(q.iter()).for_each(|(x, qi)| *x -= p * qi);
    }
}

/// Result of one inverse-iteration solve.
#[derive(Debug)]
pub struct InverseIteration {
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Unit eigenvector for the eigenvalue `lambda`, orthogonalized against
/// `cluster` (already computed unit eigenvectors of nearby eigenvalues).
pub fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    cluster: &[&[f64]],
) -> InverseIteration {
    let n = diag.len();
    let norm = norm_inf(diag, off).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    let lu = ShiftedLu::new(diag, off, lambda, tiny);

    // Deterministic, non-symmetric start vector so no eigenvector is
    // orthogonal to it by symmetry.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 * 0.618_033_988_749_895).fract() - 0.5))
        .collect();
    orthogonalize(&mut x, cluster);
    normalize(&mut x);

    let mut iterations = 0;
    let mut prev = x.clone();
    for it in 0..MAX_INVERSE_ITERATIONS {
        iterations = it + 1;
        lu.solve_in_place(&mut x);
        orthogonalize(&mut x, cluster);
        if normalize(&mut x) == 0.0 || x.iter().any(|v| !v.is_finite()) {
            break;
        }
        let s = if dot(&x, &prev) < 0.0 { -1.0 } else { 1.0 };
        let change = x
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - s * b) * (a - s * b))
            .sum::<f64>()
            .sqrt();
        prev.copy_from_slice(&x);
        if it >= 1 && change <= 1e-13 {
            break;
        }
    }

    let residual = residual_norm(diag, off, lambda, &x) / norm;
    InverseIteration {
        vector: x,
        iterations,
        residual,
    }
}

/// `‖(T − λI)x‖₂`.
pub fn residual_norm(diag: &[f64], off: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let n = diag.len();
    let mut sum = 0.0;
    for i in 0..n {
        let mut r = (diag[i] - lambda) * x[i];
        if i > 0 {
            r += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            r += off[i] * x[i + 1];
        }
        sum += r * r;
    }
    sum.sqrt()
}
