use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::loocv::{FoldError, FoldResult, LoocvOutcome};
use super::sweeps::SweepRow;
use crate::data::f32_raster_bytes;
use crate::error::{Error, Result};
use crate::eval::{DiceCurve, MetricSummary, RocCurve};

/// Metric value for CSV output; undefined ratios print as `undefined`.
pub fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(v) => v.to_string(),
        None => "undefined".to_string(),
    }
}

pub fn reports_csv(folds: &[FoldResult]) -> String {
    let mut out =
        String::from("patient_id,threshold,dice,sensitivity,specificity,ppv,tp,fp,tn,fn\n");
    for f in folds {
        let r = &f.report;
        let c = r.counts;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            f.patient_id,
            r.threshold,
            fmt_metric(r.dice),
            fmt_metric(r.sensitivity),
            fmt_metric(r.specificity),
            fmt_metric(r.ppv),
            c.tp,
            c.fp,
            c.tn,
            c.fn_
        );
    }
    out
}

pub fn roc_curve_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,tpr,fpr\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.tpr, p.fpr);
    }
    out
}

pub fn dice_curve_csv(curve: &DiceCurve) -> String {
    let mut out = String::from("threshold,dice\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{}", p.threshold, fmt_metric(p.dice));
    }
    out
}

/// Mean DICE and its standard error across folds at every threshold.
pub fn mean_dice_curve_csv(folds: &[FoldResult]) -> String {
    let mut out = String::from("threshold,mean_dice,std_err,n\n");
    let Some(first) = folds.first() else {
        return out;
    };
    for (i, p) in first.dice_curve.points.iter().enumerate() {
        let values: Vec<Option<f64>> = folds.iter().map(|f| f.dice_curve.points[i].dice).collect();
        let s = MetricSummary::from_values(&values);
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.threshold,
            fmt_metric(s.mean),
            fmt_metric(s.std_err()),
            s.n
        );
    }
    out
}

pub fn errors_csv(errors: &[FoldError]) -> String {
    let mut out = String::from("patient_id,error\n");
    for e in errors {
        let msg = e.message.replace('"', "'");
        let _ = writeln!(out, "{},\"{}\"", e.patient_id, msg);
    }
    out
}

/// `<name>,mean_dice,std_err,n` rows of a lambda or depth sweep.
pub fn sweep_rows_csv(name: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{name},mean_dice,std_err,n\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.value,
            fmt_metric(r.mean_dice),
            fmt_metric(r.std_err),
            r.n_folds
        );
    }
    out
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Write reports, summary, curves, prediction rasters, optional models and
/// the run manifest under `dir`.
pub fn write_loocv_outputs(outcome: &LoocvOutcome, dir: &Path) -> Result<()> {
    mkdir(dir)?;
    write(&dir.join("reports.csv"), reports_csv(&outcome.folds))?;
    if let Some(summary) = &outcome.summary {
        write(
            &dir.join("summary.json"),
            serde_json::to_string_pretty(summary)?,
        )?;
    }
    if !outcome.errors.is_empty() {
        write(&dir.join("errors.csv"), errors_csv(&outcome.errors))?;
    }
    let curves = dir.join("curves");
    let preds = dir.join("predictions");
    mkdir(&curves)?;
    mkdir(&preds)?;
    write(
        &curves.join("mean_dice.csv"),
        mean_dice_curve_csv(&outcome.folds),
    )?;
    for f in &outcome.folds {
        write(
            &curves.join(format!("{}_dice.csv", f.patient_id)),
            dice_curve_csv(&f.dice_curve),
        )?;
        if let Some(roc) = &f.roc {
            write(
                &curves.join(format!("{}_roc.csv", f.patient_id)),
                roc_curve_csv(roc),
            )?;
        }
        write(
            &preds.join(format!("{}_labels.u8", f.patient_id)),
            &f.predicted,
        )?;
        write(
            &preds.join(format!("{}_scores.f32", f.patient_id)),
            f32_raster_bytes(&f.scores),
        )?;
        if let Some(model) = &f.model {
            let models = dir.join("models");
            mkdir(&models)?;
            model.save(&models.join(format!("{}.json", f.patient_id)))?;
        }
    }
    write(
        &dir.join("run_manifest.json"),
        serde_json::to_string_pretty(&outcome.manifest)?,
    )?;
    Ok(())
}
