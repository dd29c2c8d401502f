use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dalsa_core::data::PatientVolume;
use dalsa_core::forest::ForestParams;
use dalsa_core::pipeline::{
    best_row, run_depth_sweep, run_lambda_sweep, run_loocv_on, write_loocv_outputs, Method,
    RunConfig,
};
use dalsa_core::synthetic::{make_gaussian_dataset, make_toy, GaussianShiftConfig, ToyConfig};

fn patients() -> Vec<PatientVolume> {
    let cfg = GaussianShiftConfig {
        n_train: 60,
        n_test: 600,
        seed: 21,
        ..Default::default()
    };
    make_gaussian_dataset(&cfg, 3).unwrap()
}

fn config(method: Method) -> RunConfig {
    RunConfig {
        method,
        forest: ForestParams {
            n_trees: 20,
            max_depth: 3,
            ..Default::default()
        },
        seed: 4,
        save_models: true,
        ..Default::default()
    }
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "run_manifest.json" {
                out.insert(
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn lambda_zero_dalsa_equals_lsa() {
    let pats = patients();
    let lsa = run_loocv_on(&config(Method::Lsa), &pats).unwrap();
    let dalsa = run_loocv_on(
        &RunConfig {
            lambda: 0.0,
            ..config(Method::Dalsa)
        },
        &pats,
    )
    .unwrap();
    for (a, b) in lsa.folds.iter().zip(&dalsa.folds) {
        assert_eq!(a.predicted, b.predicted);
    }
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let pats = patients();
    let run = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let out = run_loocv_on(&config(Method::Dalsa), &pats).unwrap();
                write_loocv_outputs(&out, dir.path()).unwrap();
            });
        read_tree(dir.path())
    };
    let one = run(1);
    assert!(one.contains_key("reports.csv") && one.contains_key("summary.json"));
    assert!(one.keys().any(|k| k.starts_with("models")));
    assert_eq!(one, run(4));
}

#[test]
fn sweeps_have_one_row_per_value() {
    let pats = patients();
    let rows = run_lambda_sweep(&config(Method::Dalsa), &pats, &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(rows.len(), 3);
    let lsa = run_loocv_on(&config(Method::Lsa), &pats).unwrap();
    assert_eq!(rows[0].mean_dice, lsa.mean_dice());
    assert!(run_lambda_sweep(&config(Method::Lsa), &pats, &[1.0]).is_err());
    assert_eq!(
        run_depth_sweep(&config(Method::Lsa), &pats, &[1])
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn toy_depth_one_reaches_plateau() {
    let toy = make_toy(&ToyConfig::default()).unwrap();
    let copy = |id: &str| {
        PatientVolume::new(
            id,
            toy.dims(),
            toy.spacing(),
            toy.channels().to_vec(),
            toy.brain_mask().to_vec(),
            toy.labels().map(<[u8]>::to_vec),
            toy.sur_labels().map(<[u8]>::to_vec),
        )
        .unwrap()
    };
    let pats = vec![copy("toy_a"), copy("toy_b")];
    let rows = run_depth_sweep(&config(Method::Lca), &pats, &[1, 2, 3, 4]).unwrap();
    let best = best_row(&rows).unwrap();
    assert_eq!(best.value, 1.0);
}
