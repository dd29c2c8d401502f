use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Method, RunConfig};
use super::manifest::{sha256_file, FoldTiming, InputChecksum, PatientTiming, RunManifest};
use crate::data::{
    extract_features, fuse_label, is_tumorous, load_patient, ClassId, ClassMode, FusionStage,
    LabelScheme, LabelSource, PatientManifest, PatientVolume, Region, SampleTable, HEALTHY,
    TUMOROUS, UNLABELED,
};
use crate::error::{Error, Result};
use crate::eval::{
    confusion_metrics, loocv_report, sweep_dice, sweep_roc, DiceCurve, LoocvSummary, MetricsReport,
    RocCurve,
};
use crate::forest::{train_forest, Forest};
use crate::rng::{derive_seed, hash_str, rng_from_seed};
use crate::weights::{compute_table_weights, WeightReport};

/// Training rows contributed by one patient. They depend only on that
/// patient's own rasters and the run configuration.
#[derive(Debug, Clone)]
pub struct PatientRows {
    pub patient_id: String,
    pub table: SampleTable,
    pub weights: Option<WeightReport>,
}

fn subsample(table: &SampleTable, ratio: f64, seed: u64, patient_id: &str) -> SampleTable {
    let n = table.len();
    let k = ((ratio * n as f64).round() as usize).clamp(1, n);
    if k == n {
        return table.clone();
    }
    let mut rng = rng_from_seed(derive_seed(seed, hash_str(patient_id)));
    let mut idx = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    table.select(&idx)
}

/// Assemble one patient's training rows for `config.method`, applying label
/// fusion when it happens before training.
pub fn training_rows(volume: &PatientVolume, config: &RunConfig) -> Result<PatientRows> {
    let pid = volume.patient_id();
    let need = |what: &str, present: bool| {
        if present {
            Ok(())
        } else {
            Err(Error::config(format!(
                "{} requires {what} rasters; {pid} has none",
                config.method
            )))
        }
    };
    let mut table = match config.method {
        Method::Lsa | Method::Dalsa => {
            need("sparse label", volume.sur_labels().is_some())?;
            extract_features(volume, Region::LabeledVoxelsOnly(LabelSource::Sparse))?
        }
        Method::Lca | Method::LcaSampled | Method::DalcaSampled => {
            need("complete label", volume.labels().is_some())?;
            let labeled =
                extract_features(volume, Region::LabeledVoxelsOnly(LabelSource::Reference))?;
            if config.method == Method::Lca {
                labeled
            } else {
                subsample(&labeled, config.sample_ratio, config.seed, pid)
            }
        }
    };
    let weights = if config.method.uses_weights() {
        let all = extract_features(volume, Region::AllBrainVoxels)?;
        let (_, report) = compute_table_weights(&table, &all, &config.weight_params(), pid)?;
        table.set_weights(report.weights.clone())?;
        Some(report)
    } else {
        None
    };
    if config.label_scheme.fusion_stage == FusionStage::BeforeTraining {
        table = table.map_labels(|l| fuse_label(l, ClassMode::TwoClass))?;
    }
    Ok(PatientRows {
        patient_id: pid.to_string(),
        table,
        weights,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FoldTimings {
    pub train_s: f64,
    pub predict_s: f64,
    pub eval_s: f64,
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub patient_id: String,
    pub report: MetricsReport,
    /// `None` when the held-out reference has a single class.
    pub roc: Option<RocCurve>,
    pub dice_curve: DiceCurve,
    /// Full-volume predicted labels, 0 outside the brain mask.
    pub predicted: Vec<ClassId>,
    /// Full-volume tumor scores, 0 outside the brain mask.
    pub scores: Vec<f32>,
    pub n_training_rows: usize,
    pub model: Option<Forest>,
    pub timings: FoldTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldError {
    pub patient_id: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct LoocvOutcome {
    pub folds: Vec<FoldResult>,
    pub errors: Vec<FoldError>,
    /// Present when at least two folds succeeded.
    pub summary: Option<LoocvSummary>,
    pub manifest: RunManifest,
}

impl LoocvOutcome {
    pub fn fold(&self, patient_id: &str) -> Option<&FoldResult> {
        self.folds.iter().find(|f| f.patient_id == patient_id)
    }

    pub fn mean_dice(&self) -> Option<f64> {
        self.summary.as_ref().and_then(|s| s.dice.mean)
    }
}

/// Per-voxel prediction for the in-mask voxels of one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientPrediction {
    pub voxel_indices: Vec<usize>,
    pub labels: Vec<ClassId>,
    /// Fraction of trees voting for a tumorous class.
    pub scores: Vec<f64>,
}

impl PatientPrediction {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Classify every in-mask voxel of `volume`.
///
/// A forest trained on fused labels thresholds the tumorous vote fraction at
/// `threshold`. A five-class forest takes the plurality class, fused to two
/// classes when `scheme.mode` is two-class.
pub fn predict_patient(
    forest: &Forest,
    volume: &PatientVolume,
    scheme: LabelScheme,
    threshold: f64,
) -> Result<PatientPrediction> {
    let test = extract_features(volume, Region::AllBrainVoxels)?;
    let votes = forest.votes(&test)?;
    let fused_alphabet = forest
        .class_alphabet
        .iter()
        .all(|&c| c == HEALTHY || c == TUMOROUS);
    let mut labels = Vec::with_capacity(test.len());
    let mut scores = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let score = votes.score(i, is_tumorous);
        let label = if fused_alphabet {
            if score >= threshold {
                TUMOROUS
            } else {
                HEALTHY
            }
        } else {
            let raw = votes.plurality(i);
            match scheme.mode {
                ClassMode::FiveClass => raw,
                ClassMode::TwoClass => fuse_label(raw, ClassMode::TwoClass)?,
            }
        };
        labels.push(label);
        scores.push(score);
    }
    Ok(PatientPrediction {
        voxel_indices: test.voxel_indices().iter().map(|&v| v as usize).collect(),
        labels,
        scores,
    })
}

fn run_fold(
    config: &RunConfig,
    held_out: &PatientVolume,
    others: Vec<&PatientRows>,
    d: usize,
) -> Result<FoldResult> {
    let pid = held_out.patient_id();
    let reference_raster = held_out
        .labels()
        .ok_or_else(|| Error::config(format!("held-out patient {pid} has no reference labels")))?;
    let train = SampleTable::concat(d, others.iter().map(|r| &r.table))?;
    let t0 = Instant::now();
    let forest = train_forest(&train, &config.forest_params())?;
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let pred = predict_patient(
        &forest,
        held_out,
        config.label_scheme,
        config.decision_threshold,
    )?;
    let n = held_out.n_voxels();
    let mut predicted = vec![UNLABELED; n];
    let mut scores = vec![0.0f32; n];
    let mut eval_pred = Vec::with_capacity(pred.len());
    let mut eval_ref = Vec::with_capacity(pred.len());
    let mut eval_scores = Vec::with_capacity(pred.len());
    for i in 0..pred.len() {
        let v = pred.voxel_indices[i];
        predicted[v] = pred.labels[i];
        scores[v] = pred.scores[i] as f32;
        if reference_raster[v] != UNLABELED {
            eval_pred.push(is_tumorous(pred.labels[i]));
            eval_ref.push(is_tumorous(reference_raster[v]));
            eval_scores.push(pred.scores[i]);
        }
    }
    let predict_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let report = confusion_metrics(&eval_pred, &eval_ref, config.decision_threshold)?;
    let roc = sweep_roc(&eval_scores, &eval_ref, &config.thresholds).ok();
    let dice_curve = sweep_dice(&eval_scores, &eval_ref, &config.thresholds)?;
    let eval_s = t2.elapsed().as_secs_f64();

    Ok(FoldResult {
        patient_id: pid.to_string(),
        report,
        roc,
        dice_curve,
        predicted,
        scores,
        n_training_rows: train.len(),
        model: config.save_models.then_some(forest),
        timings: FoldTimings {
            train_s,
            predict_s,
            eval_s,
        },
    })
}

/// Leave-one-patient-out over in-memory patients. A failing fold is recorded
/// in `errors` and the remaining folds still run.
pub fn run_loocv_on(config: &RunConfig, patients: &[PatientVolume]) -> Result<LoocvOutcome> {
    run_with_inputs(config, patients, Vec::new())
}

fn run_with_inputs(
    config: &RunConfig,
    patients: &[PatientVolume],
    inputs: Vec<InputChecksum>,
) -> Result<LoocvOutcome> {
    let start = Instant::now();
    config.validate()?;
    if patients.len() < 2 {
        return Err(Error::config(format!(
            "leave-one-patient-out needs at least 2 patients, got {}",
            patients.len()
        )));
    }
    let mut ids: Vec<&str> = patients.iter().map(|p| p.patient_id()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::data("patient ids must be unique"));
    }
    let d = patients[0].channels().len();
    if let Some(p) = patients.iter().find(|p| p.channels().len() != d) {
        return Err(Error::data(format!(
            "{} has {} channels, expected {d}",
            p.patient_id(),
            p.channels().len()
        )));
    }

    let rows: Vec<(Result<PatientRows>, f64)> = patients
        .par_iter()
        .map(|p| {
            let t = Instant::now();
            let r = training_rows(p, config);
            (r, t.elapsed().as_secs_f64())
        })
        .collect();

    let folds: Vec<Result<FoldResult>> = (0..patients.len())
        .into_par_iter()
        .map(|h| {
            let mut others = Vec::with_capacity(patients.len() - 1);
            for (j, (r, _)) in rows.iter().enumerate() {
                if j == h {
                    continue;
                }
                match r {
                    Ok(r) => others.push(r),
                    Err(e) => {
                        return Err(Error::data(format!(
                            "training patient {}: {e}",
                            patients[j].patient_id()
                        )))
                    }
                }
            }
            run_fold(config, &patients[h], others, d)
        })
        .collect();

    let mut manifest = RunManifest::new(config, inputs);
    manifest.patient_timings = patients
        .iter()
        .zip(&rows)
        .map(|(p, (_, s))| PatientTiming {
            patient_id: p.patient_id().to_string(),
            rows_s: *s,
        })
        .collect();

    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (p, fold) in patients.iter().zip(folds) {
        match fold {
            Ok(f) => {
                manifest.fold_timings.push(FoldTiming {
                    patient_id: f.patient_id.clone(),
                    timings: f.timings,
                });
                ok.push(f);
            }
            Err(e) => {
                log::error!("fold {} failed: {e}", p.patient_id());
                errors.push(FoldError {
                    patient_id: p.patient_id().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    let summary = if ok.len() >= 2 {
        let reports: Vec<(String, MetricsReport)> = ok
            .iter()
            .map(|f| (f.patient_id.clone(), f.report))
            .collect();
        Some(loocv_report(&reports)?)
    } else {
        None
    };
    manifest.total_s = start.elapsed().as_secs_f64();
    Ok(LoocvOutcome {
        folds: ok,
        errors,
        summary,
        manifest,
    })
}

/// Load the configured patients from `config.dataset_root`, with checksums of
/// every manifest and raster.
pub fn load_dataset(config: &RunConfig) -> Result<(Vec<PatientVolume>, Vec<InputChecksum>)> {
    let root = &config.dataset_root;
    let names: Vec<String> = if config.patients.is_empty() {
        let mut names = Vec::new();
        let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(root, e))?;
            if entry.path().join("patient.json").is_file() {
                names.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        names.sort();
        names
    } else {
        config.patients.clone()
    };
    if names.is_empty() {
        return Err(Error::data(format!(
            "no patient directories under {}",
            root.display()
        )));
    }
    let mut volumes = Vec::with_capacity(names.len());
    let mut inputs = Vec::new();
    for name in &names {
        let dir = root.join(name);
        let manifest_path = if dir.is_dir() {
            dir.join("patient.json")
        } else {
            dir.clone()
        };
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let manifest = PatientManifest::read(&manifest_path)?;
        for path in std::iter::once(manifest_path.clone()).chain(manifest.raster_paths(base)) {
            let rel = path.strip_prefix(root).unwrap_or(&path);
            inputs.push(InputChecksum {
                path: rel.to_string_lossy().into_owned(),
                sha256: sha256_file(&path)?,
            });
        }
        volumes.push(load_patient(&manifest_path)?);
    }
    Ok((volumes, inputs))
}

/// Load the dataset named by `config` and run leave-one-patient-out.
pub fn run_loocv(config: &RunConfig) -> Result<LoocvOutcome> {
    let (patients, inputs) = load_dataset(config)?;
    run_with_inputs(config, &patients, inputs)
}
