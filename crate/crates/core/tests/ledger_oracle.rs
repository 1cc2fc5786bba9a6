mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use common::strategies::setting;
use manyworlds::{
    chsh, correlation, correlation_sweep, decompose, figure_one_enumeration, local_strategies,
    max_local_chsh, sample_worlds, two_lab_ledger, two_lab_state, MeasurementSetting, Spin,
};
use proptest::prelude::*;

fn s(x: f64) -> MeasurementSetting {
    MeasurementSetting::new(x).unwrap()
}

fn grid(n: usize) -> Vec<MeasurementSetting> {
    (0..n).map(|k| s(PI * k as f64 / n as f64)).collect()
}

#[test]
fn cosine_law_against_both_oracles() {
    let deltas = grid(64);
    for report in correlation_sweep(&deltas) {
        let d = report.settings.1.angle();
        let by_records = common::two_lab_record_correlation(0.0, d);
        let by_density = common::density_matrix_correlation(0.0, d);
        assert!((report.expectation - by_records).abs() <= 1e-9, "Δ={d}");
        assert!((report.expectation - by_density).abs() <= 1e-9, "Δ={d}");
        assert!((report.expectation + d.cos()).abs() <= 1e-9, "Δ={d}");
    }
}

#[test]
fn equal_settings_are_perfectly_anticorrelated() {
    for theta in grid(32) {
        let report = correlation((theta, theta));
        assert!((report.expectation + 1.0).abs() <= 1e-12);
        let ledger = two_lab_ledger(theta, theta);
        assert_eq!(ledger.world_count(), 2);
        for b in ledger.branches() {
            assert_ne!(b.outcome(1), b.outcome(2));
            assert!((b.weight() - 0.5).abs() <= 1e-12);
        }
    }
}

#[test]
fn figure_one_has_four_worlds() {
    let ledgers = figure_one_enumeration(&[
        (MeasurementSetting::VERTICAL, MeasurementSetting::VERTICAL),
        (
            MeasurementSetting::HORIZONTAL,
            MeasurementSetting::HORIZONTAL,
        ),
    ]);
    let worlds: Vec<_> = ledgers.iter().flat_map(|l| l.branches()).collect();
    assert_eq!(worlds.len(), 4);
    for l in &ledgers {
        assert_eq!(l.world_count(), 2);
        let outcomes: Vec<_> = l
            .branches()
            .iter()
            .map(|b| (b.outcome(1).unwrap(), b.outcome(2).unwrap()))
            .collect();
        assert_eq!(outcomes, [(Spin::Up, Spin::Down), (Spin::Down, Spin::Up)]);
    }
}

#[test]
fn chsh_at_the_optimal_angles() {
    let v = chsh(s(0.0), s(FRAC_PI_2), s(FRAC_PI_4), s(3.0 * FRAC_PI_4));
    let oracle = {
        let e = common::density_matrix_correlation;
        e(0.0, FRAC_PI_4) - e(0.0, 3.0 * FRAC_PI_4)
            + e(FRAC_PI_2, FRAC_PI_4)
            + e(FRAC_PI_2, 3.0 * FRAC_PI_4)
    };
    assert!((v - oracle).abs() <= 1e-9);
    assert!((v + 2.0 * SQRT_2).abs() <= 1e-9);
}

#[test]
fn tsirelson_family_peaks_at_two_root_two() {
    // a = 0, a' = π/2, b = φ, b' = φ + π/2
    let mut best: f64 = 0.0;
    for k in 0..=64 {
        let phi = FRAC_PI_2 * k as f64 / 64.0;
        if phi + FRAC_PI_2 >= PI {
            continue;
        }
        let v = chsh(s(0.0), s(FRAC_PI_2), s(phi), s(phi + FRAC_PI_2)).abs();
        assert!(v <= 2.0 * SQRT_2 + 1e-9);
        best = best.max(v);
    }
    assert!((best - 2.0 * SQRT_2).abs() <= 1e-9);
}

#[test]
fn local_strategies_match_independent_enumeration() {
    let oracle = common::local_strategies();
    let lib = local_strategies();
    assert_eq!(lib.len(), 16);
    assert_eq!(oracle.len(), 16);
    for (strategy, value) in oracle {
        let found = lib
            .iter()
            .find(|l| [l.a as i32, l.a_prime as i32, l.b as i32, l.b_prime as i32] == strategy)
            .expect("every assignment is enumerated");
        assert_eq!(found.chsh(), value);
        assert!(value.abs() <= 2);
    }
    assert_eq!(max_local_chsh(), 2);
}

#[test]
fn sampled_frequencies_two_worlds() {
    let ledger = two_lab_ledger(MeasurementSetting::VERTICAL, MeasurementSetting::VERTICAL);
    let shots = 100_000;
    let f = sample_worlds(&ledger, shots, 1).unwrap();
    let bound = 3.0 * (0.25 / shots as f64).sqrt();
    for w in &f.worlds {
        assert!((w.frequency - 0.5).abs() <= bound, "{w:?}");
    }
}

#[test]
fn sampled_frequencies_four_worlds() {
    let ledger = two_lab_ledger(MeasurementSetting::VERTICAL, MeasurementSetting::HORIZONTAL);
    assert_eq!(ledger.world_count(), 4);
    let shots = 400_000;
    let f = sample_worlds(&ledger, shots, 7).unwrap();
    let bound = 3.0 * (0.25 * 0.75 / shots as f64).sqrt();
    for w in &f.worlds {
        assert!((w.weight - 0.25).abs() <= 1e-12);
        assert!((w.frequency - 0.25).abs() <= bound, "{w:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ledger_weights_match_dense_records(a in setting(), b in setting()) {
        let ledger = decompose(&two_lab_state(a, b), "prop").unwrap();
        prop_assert!((ledger.total_weight() - 1.0).abs() <= 1e-12);
        let oracle = common::two_lab_record_weights(a.angle(), b.angle());
        let report = correlation((a, b));
        for (i, s1) in Spin::BOTH.iter().enumerate() {
            for (j, s2) in Spin::BOTH.iter().enumerate() {
                prop_assert!((report.joint.get(*s1, *s2) - oracle[i][j]).abs() <= 1e-12);
            }
        }
        for branch in ledger.branches() {
            prop_assert!((branch.weight() - branch.amplitude().norm_sqr()).abs() <= 1e-15 * branch.weight());
        }
    }

    #[test]
    fn mixtures_of_local_strategies_stay_within_two(weights in prop::collection::vec(0.0..1.0f64, 16)) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let value: f64 = local_strategies()
            .iter()
            .zip(&weights)
            .map(|(strategy, w)| strategy.chsh() as f64 * w / total)
            .sum();
        prop_assert!(value.abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn sampling_tracks_weights(a in setting(), b in setting(), seed in any::<u64>()) {
        let ledger = two_lab_ledger(a, b);
        let shots = 20_000u64;
        let f = sample_worlds(&ledger, shots, seed).unwrap();
        let total: u64 = f.worlds.iter().map(|w| w.count).sum();
        prop_assert_eq!(total, shots);
        for w in &f.worlds {
            // 5σ keeps a 128-case random sweep from flaking
            let sigma = (w.weight * (1.0 - w.weight) / shots as f64).sqrt();
            prop_assert!((w.frequency - w.weight).abs() <= 5.0 * sigma + 1e-12);
        }
    }
}
