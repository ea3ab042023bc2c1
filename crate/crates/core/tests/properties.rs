mod support;

use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sbsa::pipeline::synthetic::{synthesize_recording, RecordingSpec};
use sbsa::pipeline::{analyze_recording, analyze_recording_serial, BeatConfig};
use sbsa::stats::{linear_regression_xy, wilcoxon_signed_rank_with, WilcoxonMethod};
use sbsa::*;

fn bump(amp: f64, center: f64, width: f64) -> Signal {
    Signal::on_interval(-8.0, 8.0, 0.02, |t| {
        amp * (-0.5 * ((t - center) / width).powi(2)).exp()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bound_state_count_is_monotone(
        amp in 0.2f64..3.0, center in -2.0f64..2.0, width in 0.3f64..1.5,
        chi in 0.01f64..50.0, factor in 1.0f64..4.0,
    ) {
        let y = bump(amp, center, width);
        let lo = count_negative_eigenvalues(&y, chi).unwrap();
        let hi = count_negative_eigenvalues(&y, chi * factor).unwrap();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn eigenfunctions_are_orthonormal(amp in 0.5f64..2.0, width in 0.4f64..1.2, chi in 1.0f64..20.0) {
        let d = decompose(&bump(amp, 0.3, width), chi).unwrap();
        for m in 0..d.len() {
            for n in 0..d.len() {
                let expect = if m == n { 1.0 } else { 0.0 };
                prop_assert!((d.inner_product(m, n) - expect).abs() < 1e-8);
            }
        }
        let k = d.kappas();
        prop_assert!(k.windows(2).all(|w| w[0] >= w[1]) && k.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn phase_split_is_additive_and_nonnegative(
        amp in 0.5f64..2.0, width in 0.4f64..1.2, chi in 1.0f64..20.0, n_s in 0usize..6,
    ) {
        let y = bump(amp, -0.4, width);
        let d = decompose(&y, chi).unwrap();
        let n_s = n_s.min(d.len());
        let split = split_phases(&d, n_s).unwrap();
        let rec = reconstruct(&d);
        let total = split.total();
        prop_assert_eq!(total.samples(), rec.samples());
        prop_assert!(split.systolic.samples().iter().all(|&v| v >= 0.0));
        prop_assert!(split.diastolic.samples().iter().all(|&v| v >= 0.0));

        let inv = invariant_set(&d, &y, n_s).unwrap();
        prop_assert_eq!(inv.inv1_global, inv.inv1_systolic + inv.inv1_diastolic);
        prop_assert_eq!(inv.inv2_global, inv.inv2_systolic + inv.inv2_diastolic);
    }

    #[test]
    fn regression_shift_and_scale(
        seed in 0u64..1000, shift in -1e3f64..1e3, scale in 0.01f64..100.0,
    ) {
        let mut r = support::rng(seed);
        let x: Vec<f64> = (0..30).map(|_| r.random_range(0.0..10.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + r.random_range(-3.0..3.0)).collect();
        let base = linear_regression_xy(&x, &y).unwrap();

        let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let shifted = linear_regression_xy(&xs, &y).unwrap();
        prop_assert!((shifted.slope - base.slope).abs() <= 1e-9 * base.slope.abs().max(1.0));
        prop_assert!((shifted.r_squared - base.r_squared).abs() <= 1e-9);
        prop_assert!((shifted.intercept - (base.intercept - base.slope * shift)).abs() <= 1e-7 * (1.0 + shift.abs()));

        let xc: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let scaled = linear_regression_xy(&xc, &y).unwrap();
        prop_assert!((scaled.slope * scale - base.slope).abs() <= 1e-9 * base.slope.abs().max(1.0));
        prop_assert!((scaled.r_squared - base.r_squared).abs() <= 1e-9);
    }

    #[test]
    fn summary_is_permutation_invariant(values in prop::collection::vec(-1e6f64..1e6, 2..60), seed in 0u64..1000) {
        let mut shuffled = values.clone();
        let mut r = support::rng(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.random_range(0..=i));
        }
        prop_assert_eq!(summarize(&values).unwrap(), summarize(&shuffled).unwrap());
    }
}

#[test]
fn wilcoxon_exact_and_normal_agree_at_twenty() {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let mut r = support::rng(seed);
        let shift = r.random_range(-0.8..0.8);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let before: Vec<f64> = (0..20).map(|_| noise.sample(&mut r)).collect();
        let after: Vec<f64> = before
            .iter()
            .map(|b| b + shift + noise.sample(&mut r))
            .collect();
        let exact = wilcoxon_signed_rank_with(&before, &after, WilcoxonMethod::Exact).unwrap();
        let normal = wilcoxon_signed_rank_with(&before, &after, WilcoxonMethod::Normal).unwrap();
        assert_eq!(exact.n_effective, 20);
        assert_eq!(exact.statistic, normal.statistic);
        worst = worst.max((exact.p_value - normal.p_value).abs());
    }
    assert!(worst <= 0.01, "max |dp| = {worst}");
}

#[test]
fn parallel_analysis_equals_serial() {
    let spec = RecordingSpec {
        duration_s: 12.0,
        seed: 5,
        ..Default::default()
    };
    let cfg = BeatConfig::default();
    let rec = synthesize_recording(&spec, &cfg).unwrap();
    let windows = segment_beats(&rec.signal, &SegmentationConfig::default()).unwrap();
    assert_eq!(windows, rec.windows());
    let par = analyze_recording(&rec.signal, &windows, &cfg).unwrap();
    let ser = analyze_recording_serial(&rec.signal, &windows, &cfg).unwrap();
    assert_eq!(par, ser);
    assert!(par
        .iter()
        .enumerate()
        .all(|(k, a)| a.record.beat_index == k + 1));
}
