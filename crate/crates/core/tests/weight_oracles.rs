use std::collections::BTreeMap;

use dalsa_core::data::{extract_features, LabelSource, Region};
use dalsa_core::synthetic::{
    analytic_log_ratio, make_gaussian_shift, make_toy, GaussianShiftConfig, ToyConfig, ToyLevel,
};
use dalsa_core::weights::{compute_patient_weights, compute_table_weights, WeightParams};
use proptest::prelude::*;

#[test]
fn toy_weights_are_cell_ratios() {
    let cfg = ToyConfig::default();
    let mut n_test: BTreeMap<ToyLevel, f64> = BTreeMap::new();
    let mut n_sur: BTreeMap<ToyLevel, f64> = BTreeMap::new();
    for y in 0..cfg.height {
        for x in 0..cfg.width {
            let k = cfg.level(x, y);
            *n_test.entry(k).or_default() += 1.0;
            if cfg.in_sur(x, y) {
                *n_sur.entry(k).or_default() += 1.0;
            }
        }
    }
    let vol = make_toy(&cfg).unwrap();
    let report = compute_patient_weights(&vol, &WeightParams::default()).unwrap();
    for (&v, &w) in report.voxel_indices.iter().zip(&report.weights) {
        let v = v as usize;
        let k = cfg.level(v % cfg.width, v / cfg.width);
        let expected = n_test[&k] / n_sur[&k];
        assert!((w - expected).abs() < 1e-4, "voxel {v}: {w} vs {expected}");
    }
    assert!((report.sum_weights - 100.0).abs() < 1e-6);
}

#[test]
fn gaussian_log_weights_track_analytic_ratio() {
    let cfg = GaussianShiftConfig {
        n_train: 10_000,
        n_test: 10_000,
        seed: 3,
        ..Default::default()
    };
    let (train, test) = make_gaussian_shift(&cfg).unwrap();
    let (model, _) = compute_table_weights(&train, &test, &WeightParams::default(), "g").unwrap();
    // Same-size pools, so the fitted log weight estimates the log ratio with no offset.
    for x in [-1.0, 0.0, 0.5, 1.0, 2.0] {
        let err = model.log_weight(&[x]) - analytic_log_ratio(&[x], &cfg);
        assert!(err.abs() < 0.1, "x={x}: error {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lambda_zero_gives_unit_weights(seed in any::<u64>()) {
        let cfg = GaussianShiftConfig { seed, n_train: 200, n_test: 500, ..Default::default() };
        let (train, test) = make_gaussian_shift(&cfg).unwrap();
        let params = WeightParams { lambda: 0.0, ..Default::default() };
        let (_, report) = compute_table_weights(&train, &test, &params, "g").unwrap();
        prop_assert!(report.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn sparse_rows_only_from_sur(seed in 0u64..4) {
        let cfg = GaussianShiftConfig { seed, n_train: 50, n_test: 400, ..Default::default() };
        let vol = dalsa_core::synthetic::make_gaussian_patient(&cfg, "g").unwrap();
        let sur = extract_features(&vol, Region::LabeledVoxelsOnly(LabelSource::Sparse)).unwrap();
        let report = compute_patient_weights(&vol, &WeightParams::default()).unwrap();
        prop_assert_eq!(report.voxel_indices.as_slice(), sur.voxel_indices());
        prop_assert_eq!(report.n_test, 400);
    }
}
