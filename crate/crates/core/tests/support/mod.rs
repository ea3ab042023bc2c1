//! Shared helpers for integration tests: a dense eigensolver used as an
//! independent reference, and seeded generators of test signals.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbsa::Signal;

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
/// ascending. `a` is row-major `n × n` and is destroyed.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Dense copy of a symmetric tridiagonal matrix.
pub fn dense_tridiagonal(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = diag[i];
        if i + 1 < n {
            a[i * n + i + 1] = off[i];
            a[(i + 1) * n + i] = off[i];
        }
    }
    a
}

/// Sum of one to three gaussians with amplitude in [0.5, 2], center in
/// [−2, 2] and width in [0.5, 1.5], sampled on `[−half_width, half_width]`.
pub fn random_bump(rng: &mut ChaCha8Rng, half_width: f64, dt: f64) -> Signal {
    let k = rng.random_range(1..=3);
    let terms: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| {
            (
                rng.random_range(0.5..=2.0),
                rng.random_range(-2.0..=2.0),
                rng.random_range(0.5..=1.5),
            )
        })
        .collect();
    Signal::on_interval(-half_width, half_width, dt, |t| {
        terms
            .iter()
            .map(|&(a, c, s)| a * (-0.5 * ((t - c) / s).powi(2)).exp())
            .sum()
    })
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sech2(half_width: f64, dt: f64) -> Signal {
    Signal::on_interval(-half_width, half_width, dt, |t| 1.0 / t.cosh().powi(2)).unwrap()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Bound states of `−d²/dt² − χy` on the whole lattice, `y` zero outside its
/// window, with energy below `lambda < 0`. The free exterior is folded into
/// the end rows exactly: a decaying solution there has ratio `z`, with
/// `z + 1/z = 2 − λdt²`.
pub fn line_count_below(y: &Signal, chi: f64, lambda: f64) -> usize {
    let dt = y.dt();
    let h = 1.0 / (dt * dt);
    let a = 2.0 - lambda * dt * dt;
    let z = 2.0 / (a + (a * a - 4.0).sqrt());
    let s = y.samples();
    let n = s.len();
    let mut count = 0;
    let mut q = 0.0;
    for (i, v) in s.iter().enumerate() {
        let mut d = 2.0 * h - chi * v - lambda;
        if i == 0 {
            d -= z * h;
        }
        if i + 1 == n {
            d -= z * h;
        }
        q = if i == 0 { d } else { d - h * h / q };
        if q == 0.0 {
            q = -f64::MIN_POSITIVE;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest κ among line bound states with `κ² > floor`, or `None`.
pub fn smallest_line_kappa(y: &Signal, chi: f64, floor: f64) -> Option<f64> {
    let total = line_count_below(y, chi, -floor);
    if total == 0 {
        return None;
    }
    let peak = y.samples().iter().fold(0.0f64, |m, &v| m.max(chi * v));
    let (mut lo, mut hi) = (-peak - 1.0, -floor);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if line_count_below(y, chi, mid) < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((-lo).sqrt())
}
