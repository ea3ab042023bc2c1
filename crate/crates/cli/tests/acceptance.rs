//! End-to-end acceptance checks. Runs as a plain binary (no test harness) so
//! every check prints one PASS/FAIL line; exits non-zero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use sbsa::io::ColumnSpec;
use sbsa::pipeline::{analyze_recording, BeatConfig};
use sbsa::signal::relative_mse;
use sbsa::spectral::tridiag;
use sbsa::stats::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod};
use sbsa::transform::centered_norming;
use sbsa::*;
use support::{
    dense_tridiagonal, jacobi_eigenvalues, random_bump, relative_error, rng, sech2,
    smallest_line_kappa,
};

const SPECTRUM_REL_TOL: f64 = 1e-3;
const SPECTRUM_TIME_LIMIT: Duration = Duration::from_secs(5);
const RECONSTRUCTION_REL_L2_TOL: f64 = 1e-3;
const INVARIANT_REL_TOL: f64 = 1e-3;
const SUM_RULE_SLACK: f64 = 1e-6;
const SUM_RULE_BUMPS: usize = 50;
/// Moderate coupling: at larger χ the true gaps shrink below the O(dt²)
/// bias of the three-point stencil.
const SUM_RULE_CHIS: [f64; 5] = [0.1, 0.2, 0.5, 1.0, 2.0];
const SUM_RULE_HALF_WIDTH: f64 = 10.0;
/// Zero padding is chosen so the box edge sits this many decay lengths of the
/// shallowest bound state away; the box then perturbs κ by about e^(−2·12).
const SUM_RULE_DECAY_LENGTHS: f64 = 12.0;
const SUM_RULE_MAX_PAD: usize = 4_000_000;
const SUM_RULE_DT: f64 = 0.01;
const SEMICLASSICAL_CHIS: [f64; 4] = [10.0, 1e2, 1e3, 1e4];
const SEMICLASSICAL_FINAL_GAP: f64 = 0.02;
const SEMICLASSICAL_TIME_LIMIT: Duration = Duration::from_secs(60);
const ROUND_TRIP_KAPPA_TOL: f64 = 1e-3;
const ROUND_TRIP_MSE_TOL: f64 = 1e-4;
const ORACLE_CASES: usize = 25;
const ORACLE_MAX_SIZE: usize = 200;
const ORACLE_TOL: f64 = 1e-10;
const BRS_SLOPE: f64 = -0.105;
const BRS_SLOPE_REL_TOL: f64 = 0.10;
const BRS_MIN_R2: f64 = 0.9;
const BRS_DURATION_S: f64 = 300.0;
const BRS_NOISE_MS: f64 = 3.0;
const COMPONENT_RANGE: (usize, usize) = (5, 10);
const COMPONENT_MIN_FRACTION: f64 = 0.9;
const WILCOXON_EXACT_P: f64 = 0.0625;
const WILCOXON_MAX_DP: f64 = 0.01;
const WILCOXON_SEEDS: u64 = 100;
const EARLY_SYSTOLIC_ENERGY: f64 = 0.6;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bundled_recording() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_abp.csv")
}

fn pt_cases() -> impl Iterator<Item = (usize, f64)> {
    (1..=4).map(|n| (n, (n * (n + 1)) as f64))
}

fn poschl_teller_spectra() -> Check {
    let start = Instant::now();
    let y = sech2(15.0, 0.01);
    let mut worst = 0.0f64;
    for (n, chi) in pt_cases() {
        let d = decompose(&y, chi).map_err(|e| e.to_string())?;
        if d.len() != n {
            return Err(format!("chi = {chi}: {} bound states, expected {n}", d.len()));
        }
        for (k, kappa) in d.kappas().iter().enumerate() {
            worst = worst.max(relative_error(*kappa, (n - k) as f64));
        }
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= SPECTRUM_REL_TOL && elapsed < SPECTRUM_TIME_LIMIT,
        format!("max relative kappa error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn reflectionless_reconstruction() -> Check {
    let y = sech2(15.0, 0.01);
    let mut worst = 0.0f64;
    for (_, chi) in pt_cases() {
        let d = decompose(&y, chi).map_err(|e| e.to_string())?;
        worst = worst.max(relative_mse(y.samples(), reconstruct(&d).samples()).sqrt());
    }
    ensure(
        worst <= RECONSTRUCTION_REL_L2_TOL,
        format!("max relative L2 error {worst:.2e}"),
    )
}

fn invariant_identities() -> Check {
    let y = sech2(15.0, 0.01);
    let d = decompose(&y, 6.0).map_err(|e| e.to_string())?;
    let inv = invariant_set(&d, &y, 1).map_err(|e| e.to_string())?;
    let e1 = relative_error(inv.inv1_global, 2.0);
    let e2 = relative_error(inv.inv2_global, 4.0 / 3.0);
    ensure(
        e1 <= INVARIANT_REL_TOL && e2 <= INVARIANT_REL_TOL,
        format!(
            "INV1 = {:.6} (rel {e1:.1e}), INV2 = {:.6} (rel {e2:.1e})",
            inv.inv1_global, inv.inv2_global
        ),
    )
}

fn bump_corpus() -> Vec<Signal> {
    let mut r = rng(4);
    (0..SUM_RULE_BUMPS)
        .map(|_| random_bump(&mut r, SUM_RULE_HALF_WIDTH, SUM_RULE_DT))
        .collect()
}

fn sum_rules(corpus: &[Signal]) -> Check {
    let mut violations = 0;
    let mut widest = 0usize;
    let (mut margin1, mut margin2) = (f64::INFINITY, f64::INFINITY);
    for y in corpus {
        for &chi in &SUM_RULE_CHIS {
            let floor = discretize_operator(y, chi).map_err(|e| e.to_string())?.zero_threshold();
            let pad = match smallest_line_kappa(y, chi, floor) {
                Some(k) => (SUM_RULE_DECAY_LENGTHS / (k * y.dt())).ceil() as usize,
                None => 0,
            };
            if pad > SUM_RULE_MAX_PAD {
                return Err(format!("chi = {chi}: bound state too shallow to resolve ({pad} samples of padding)"));
            }
            widest = widest.max(pad);
            let padded = y.zero_padded(pad);
            let d = decompose(&padded, chi).map_err(|e| e.to_string())?;
            let inv = invariant_set(&d, &padded, 0).map_err(|e| e.to_string())?;
            let m1 = inv.inv1_global - inv.direct_inv1;
            let m2 = inv.direct_inv2 - inv.inv2_global;
            margin1 = margin1.min(m1);
            margin2 = margin2.min(m2);
            if m1 < -SUM_RULE_SLACK || m2 < -SUM_RULE_SLACK {
                violations += 1;
            }
        }
    }
    ensure(
        violations == 0,
        format!(
            "{violations} violations in {} cases; min INV1 - int y = {margin1:.2e}, min int y^2 - INV2 = {margin2:.2e}; widest padding {widest} samples",
            corpus.len() * SUM_RULE_CHIS.len()
        ),
    )
}

fn semiclassical_convergence() -> Check {
    let start = Instant::now();
    let y = Signal::on_interval(-5.0, 5.0, 0.001, |t| (-0.5 * (t / 0.1).powi(2)).exp())
        .map_err(|e| e.to_string())?;
    let (i1, i2) = (y.integral(), y.integrate_with(|v| v * v));
    let mut gaps = Vec::new();
    for &chi in &SEMICLASSICAL_CHIS {
        let d = decompose(&y, chi).map_err(|e| e.to_string())?;
        let inv = invariant_set(&d, &y, 0).map_err(|e| e.to_string())?;
        gaps.push(((inv.inv1_global - i1).abs() / i1, (i2 - inv.inv2_global).abs() / i2));
    }
    let elapsed = start.elapsed();
    let monotone = gaps.windows(2).all(|w| w[1].0 <= w[0].0 && w[1].1 <= w[0].1);
    let last = gaps[gaps.len() - 1];
    let fmt: Vec<String> = gaps.iter().map(|(a, b)| format!("({a:.1e}, {b:.1e})")).collect();
    ensure(
        monotone
            && last.0 < SEMICLASSICAL_FINAL_GAP
            && last.1 < SEMICLASSICAL_FINAL_GAP
            && elapsed < SEMICLASSICAL_TIME_LIMIT,
        format!("gaps {}, {elapsed:.2?}", fmt.join(" ")),
    )
}

fn bound_state_monotonicity(corpus: &[Signal]) -> Check {
    let sweep: Vec<f64> = (0..=60).map(|k| 10f64.powf(-2.0 + k as f64 / 15.0)).collect();
    let mut violations = 0;
    let mut evaluations = 0;
    for y in corpus {
        let mut prev = 0;
        for &chi in &sweep {
            let n = count_negative_eigenvalues(y, chi).map_err(|e| e.to_string())?;
            evaluations += 1;
            if n < prev {
                violations += 1;
            }
            prev = n;
        }
    }
    ensure(
        violations == 0,
        format!("{violations} decreases over {evaluations} counts (chi in [1e-2, 1e2])"),
    )
}

fn determinant_round_trip() -> Check {
    let kappas = [2.0, 1.0];
    let v = synthesize_reflectionless(&kappas, &centered_norming(&kappas), Grid::on_interval(-15.0, 15.0, 0.01))
        .map_err(|e| e.to_string())?;
    let d = decompose(&v, 1.0).map_err(|e| e.to_string())?;
    if d.len() != 2 {
        return Err(format!("{} bound states, expected 2", d.len()));
    }
    let err = d
        .kappas()
        .iter()
        .zip(kappas)
        .map(|(k, e)| relative_error(*k, e))
        .fold(0.0, f64::max);
    let mse = relative_mse(v.samples(), reconstruct(&d).samples());
    ensure(
        err <= ROUND_TRIP_KAPPA_TOL && mse <= ROUND_TRIP_MSE_TOL,
        format!("kappas {:?} (rel {err:.1e}), relative mse {mse:.1e}", d.kappas()),
    )
}

fn dense_oracle() -> Check {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..ORACLE_CASES {
        let n = r.random_range(3..=ORACLE_MAX_SIZE);
        let dt = r.random_range(0.02..0.5);
        let chi = 10f64.powf(r.random_range(-1.0..2.0));
        let y: Vec<f64> = (0..n).map(|_| r.random_range(0.0..3.0)).collect();
        let op = discretize_operator(&Signal::new(y, dt, 0.0).map_err(|e| e.to_string())?, chi)
            .map_err(|e| e.to_string())?;
        let reference = jacobi_eigenvalues(dense_tridiagonal(op.diagonal(), op.off_diagonal()), n);
        let computed = tridiag::all_eigenvalues(op.diagonal(), op.off_diagonal());
        for (a, b) in computed.iter().zip(&reference) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(
        worst <= ORACLE_TOL,
        format!("{ORACLE_CASES} operators, max eigenvalue discrepancy {worst:.1e}"),
    )
}

fn run_cli(args: &[&str]) -> std::result::Result<serde_json::Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sbsa"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "sbsa {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn brs_reproduction() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().ok_or("non-UTF-8 temp path")?;
    let rec = dir.path().join("recording.csv");
    let rec = rec.to_str().ok_or("non-UTF-8 temp path")?;
    let beats = dir.path().join("beats.csv");
    let beats = beats.to_str().ok_or("non-UTF-8 temp path")?;
    let duration = BRS_DURATION_S.to_string();
    let slope = BRS_SLOPE.to_string();
    let noise = BRS_NOISE_MS.to_string();
    run_cli(&[
        "--out", out, "synth", "abp", "--duration", &duration, "--couple-slope", &slope,
        "--noise-ms", &noise, "--seed", "9", "-o", rec,
    ])?;
    run_cli(&["--out", out, "pipeline", rec])?;
    let report = run_cli(&["--out", out, "brs", beats, "--predictor", "all"])?;
    let results = report["result"].as_array().ok_or("brs report has no results")?;
    let fit = |name: &str| -> std::result::Result<(f64, f64), String> {
        let r = results
            .iter()
            .find(|r| r["predictor"] == name)
            .ok_or(format!("no {name} result"))?;
        let g = &r["regression"];
        Ok((
            g["slope"].as_f64().ok_or("slope missing")?,
            g["r_squared"].as_f64().ok_or("r_squared missing")?,
        ))
    };
    let (s, r2) = fit("lambda1")?;
    let (_, r2_sbp) = fit("sbp")?;
    let (_, r2_pp) = fit("pp")?;
    let slope_err = (s - BRS_SLOPE).abs() / BRS_SLOPE.abs();
    ensure(
        slope_err <= BRS_SLOPE_REL_TOL && r2 >= BRS_MIN_R2 && r2 > r2_sbp && r2 > r2_pp,
        format!(
            "slope {s:.4} (rel {slope_err:.1e}), R2 {r2:.3}; R2 with SBP {r2_sbp:.3}, PP {r2_pp:.3}"
        ),
    )
}

fn bundled_analysis() -> std::result::Result<Vec<sbsa::pipeline::BeatAnalysis>, String> {
    let y = load_signal(&bundled_recording(), ColumnSpec::TIME_VALUE, None).map_err(|e| e.to_string())?;
    let windows = segment_beats(&y, &SegmentationConfig::default()).map_err(|e| e.to_string())?;
    analyze_recording(&y, &windows, &BeatConfig::default()).map_err(|e| e.to_string())
}

fn component_count(beats: &[sbsa::pipeline::BeatAnalysis]) -> Check {
    let inside = beats
        .iter()
        .filter(|b| (COMPONENT_RANGE.0..=COMPONENT_RANGE.1).contains(&b.record.n_chi))
        .count();
    let converged = beats.iter().filter(|b| b.record.converged).count();
    let fraction = inside as f64 / beats.len() as f64;
    ensure(
        fraction >= COMPONENT_MIN_FRACTION,
        format!(
            "{inside}/{} beats use 5 to 10 solitons ({:.0}%), {converged} reached the error target",
            beats.len(),
            100.0 * fraction
        ),
    )
}

fn wilcoxon_exactness() -> Check {
    let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.5, 2.5, 3.5, 4.5, 5.5])
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let noise = Normal::new(0.0, 1.0).map_err(|e| e.to_string())?;
    for seed in 0..WILCOXON_SEEDS {
        let mut g = rng(1000 + seed);
        let shift = g.random_range(-0.8..0.8);
        let before: Vec<f64> = (0..20).map(|_| noise.sample(&mut g)).collect();
        let after: Vec<f64> = before.iter().map(|b| b + shift + noise.sample(&mut g)).collect();
        let exact = wilcoxon_signed_rank_with(&before, &after, WilcoxonMethod::Exact).map_err(|e| e.to_string())?;
        let approx = wilcoxon_signed_rank_with(&before, &after, WilcoxonMethod::Normal).map_err(|e| e.to_string())?;
        if exact.n_effective != 20 {
            return Err(format!("seed {seed}: {} nonzero differences", exact.n_effective));
        }
        worst = worst.max((exact.p_value - approx.p_value).abs());
    }
    ensure(
        r.p_value == WILCOXON_EXACT_P && worst <= WILCOXON_MAX_DP,
        format!("n = 5 all positive: p = {}; n = 20, {WILCOXON_SEEDS} seeds: max |dp| = {worst:.4}", r.p_value),
    )
}

fn phase_split(beats: &[sbsa::pipeline::BeatAnalysis]) -> Check {
    let mut bad_sum = 0;
    let mut negative = 0;
    let mut min_early = f64::INFINITY;
    for b in beats {
        let (s, d) = (b.phases.systolic.samples(), b.phases.diastolic.samples());
        let total = b.phases.total();
        if total.samples() != b.sbsa.reconstruction.samples() {
            bad_sum += 1;
        }
        if s.iter().chain(d).any(|&v| v < 0.0) {
            negative += 1;
        }
        let half = s.len() / 2;
        let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        min_early = min_early.min(energy(&s[..half]) / energy(s));
    }
    ensure(
        bad_sum == 0 && negative == 0 && min_early >= EARLY_SYSTOLIC_ENERGY,
        format!(
            "{} beats: {bad_sum} inexact sums, {negative} with negative samples, min early systolic energy share {:.3}",
            beats.len(),
            min_early
        ),
    )
}

fn main() {
    let corpus = bump_corpus();
    let beats = bundled_analysis();
    let from_beats = |f: fn(&[sbsa::pipeline::BeatAnalysis]) -> Check| match &beats {
        Ok(b) => f(b),
        Err(e) => Err(e.clone()),
    };

    let checks: Vec<(&str, Check)> = vec![
        ("Poschl-Teller spectra", poschl_teller_spectra()),
        ("reflectionless reconstruction", reflectionless_reconstruction()),
        ("invariant identities", invariant_identities()),
        ("sum-rule inequalities", sum_rules(&corpus)),
        ("semiclassical convergence", semiclassical_convergence()),
        ("bound-state count monotonicity", bound_state_monotonicity(&corpus)),
        ("determinant-formula round trip", determinant_round_trip()),
        ("dense-oracle equivalence", dense_oracle()),
        ("baroreflex pipeline reproduction", brs_reproduction()),
        ("beat component count", from_beats(component_count)),
        ("Wilcoxon exactness", wilcoxon_exactness()),
        ("phase-split additivity", from_beats(phase_split)),
    ];

    let mut failed = 0;
    for (k, (name, result)) in checks.iter().enumerate() {
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
