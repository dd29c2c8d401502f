use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Confusion {
    pub fn from_masks(pred: &[bool], reference: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &r) in pred.iter().zip(reference) {
            match (p, r) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn dice(&self) -> Option<f64> {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn ppv(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }
}

/// Metrics of one binary segmentation. `None` marks a ratio whose
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dice: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub counts: Confusion,
    pub threshold: f64,
}

impl MetricsReport {
    pub fn from_confusion(counts: Confusion, threshold: f64) -> Self {
        MetricsReport {
            dice: counts.dice(),
            sensitivity: counts.sensitivity(),
            specificity: counts.specificity(),
            ppv: counts.ppv(),
            counts,
            threshold,
        }
    }
}

/// Confusion counts and derived ratios of `pred` against `reference`. Both
/// masks list the evaluation voxels in the same order.
pub fn confusion_metrics(
    pred: &[bool],
    reference: &[bool],
    threshold: f64,
) -> Result<MetricsReport> {
    if pred.len() != reference.len() {
        return Err(Error::data(format!(
            "prediction has {} voxels, reference has {}",
            pred.len(),
            reference.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::data("no evaluation voxels"));
    }
    Ok(MetricsReport::from_confusion(
        Confusion::from_masks(pred, reference),
        threshold,
    ))
}
