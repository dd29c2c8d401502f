//! Leave-one-patient-out experiments and parameter sweeps.

mod config;
mod loocv;
mod manifest;
mod report;
mod sweeps;

pub use config::{Method, RunConfig};
pub use loocv::{
    load_dataset, predict_patient, run_loocv, run_loocv_on, training_rows, FoldError, FoldResult,
    FoldTimings, LoocvOutcome, PatientPrediction, PatientRows,
};
pub use manifest::{sha256_file, InputChecksum, RunManifest};
pub use report::{
    dice_curve_csv, errors_csv, fmt_metric, mean_dice_curve_csv, reports_csv, roc_curve_csv,
    sweep_rows_csv, write_loocv_outputs,
};
pub use sweeps::{best_row, run_depth_sweep, run_lambda_sweep, SweepRow};
