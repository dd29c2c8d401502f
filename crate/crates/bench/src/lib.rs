//! Shared fixtures for the benchmarks.

use dalsa_core::data::{extract_features, LabelSource, PatientVolume, Region, SampleTable};
use dalsa_core::synthetic::{make_gaussian_patient, make_gaussian_shift, GaussianShiftConfig};

/// Gaussian covariate-shift tables with `n_train` biased and `10 * n_train`
/// test rows.
pub fn shift_tables(n_train: usize, seed: u64) -> (SampleTable, SampleTable) {
    let cfg = GaussianShiftConfig {
        n_train,
        n_test: 10 * n_train,
        seed,
        ..Default::default()
    };
    make_gaussian_shift(&cfg).expect("valid config")
}

/// A `d`-dimensional labeled table of `n` rows drawn from the test marginal.
pub fn forest_table(n: usize, d: usize, seed: u64) -> SampleTable {
    let cfg = GaussianShiftConfig {
        d,
        n_train: 10,
        n_test: n,
        seed,
        ..Default::default()
    };
    make_gaussian_shift(&cfg).expect("valid config").1
}

/// One biased-annotation patient with `n_voxels` voxels.
pub fn patient(n_voxels: usize, seed: u64) -> PatientVolume {
    let cfg = GaussianShiftConfig {
        n_train: n_voxels / 10,
        n_test: n_voxels,
        seed,
        ..Default::default()
    };
    make_gaussian_patient(&cfg, "bench").expect("valid config")
}

pub fn sparse_rows(volume: &PatientVolume) -> SampleTable {
    extract_features(volume, Region::LabeledVoxelsOnly(LabelSource::Sparse))
        .expect("annotated voxels")
}

/// Scores in `[0, 1]` on the vote-fraction lattice with a correlated reference.
pub fn scores(n: usize) -> (Vec<f64>, Vec<bool>) {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..n)
        .map(|_| {
            let s = (next() * 100.0).round() / 100.0;
            (s, next() < s)
        })
        .unzip()
}
