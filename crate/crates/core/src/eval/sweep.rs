use serde::{Deserialize, Serialize};

use super::metrics::Confusion;
use crate::error::{Error, Result};

/// 101 equally spaced thresholds `0.00, 0.01, ..., 1.00`.
pub fn default_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Roc,
    Dice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DicePoint {
    pub threshold: f64,
    pub dice: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceCurve {
    pub points: Vec<DicePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepCurve {
    Roc(RocCurve),
    Dice(DiceCurve),
}

/// Scores split by reference class, each sorted ascending.
struct Sorted {
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl Sorted {
    fn new(scores: &[f64], reference: &[bool], thresholds: &[f64]) -> Result<Self> {
        if scores.len() != reference.len() {
            return Err(Error::data(format!(
                "{} scores for {} reference voxels",
                scores.len(),
                reference.len()
            )));
        }
        if scores.is_empty() {
            return Err(Error::data("no evaluation voxels"));
        }
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::data(format!("non-finite score {s}")));
        }
        if thresholds.is_empty() {
            return Err(Error::config("threshold grid is empty"));
        }
        if thresholds.iter().any(|t| !t.is_finite())
            || thresholds.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::config(
                "thresholds must be finite and strictly increasing",
            ));
        }
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (&s, &r) in scores.iter().zip(reference) {
            if r {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        Ok(Sorted { pos, neg })
    }

    /// Counts for the labeling `score >= t`.
    fn confusion(&self, t: f64) -> Confusion {
        let tp = (self.pos.len() - self.pos.partition_point(|&s| s < t)) as u64;
        let fp = (self.neg.len() - self.neg.partition_point(|&s| s < t)) as u64;
        Confusion {
            tp,
            fp,
            tn: self.neg.len() as u64 - fp,
            fn_: self.pos.len() as u64 - tp,
        }
    }
}

/// Area under a piecewise-linear ROC through `points` plus the corners
/// (0,0) and (1,1), by the trapezoidal rule over points sorted by FPR.
pub fn trapezoid_auc(points: &[RocPoint]) -> f64 {
    let mut xy: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    xy.push((0.0, 0.0));
    xy.push((1.0, 1.0));
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    xy.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// ROC curve over `thresholds`. Fails if the reference has only one class.
pub fn sweep_roc(scores: &[f64], reference: &[bool], thresholds: &[f64]) -> Result<RocCurve> {
    let sorted = Sorted::new(scores, reference, thresholds)?;
    if sorted.pos.is_empty() || sorted.neg.is_empty() {
        return Err(Error::data(
            "ROC undefined: reference is all positive or all negative",
        ));
    }
    let (np, nn) = (sorted.pos.len() as f64, sorted.neg.len() as f64);
    let points: Vec<RocPoint> = thresholds
        .iter()
        .map(|&t| {
            let c = sorted.confusion(t);
            RocPoint {
                threshold: t,
                tpr: c.tp as f64 / np,
                fpr: c.fp as f64 / nn,
            }
        })
        .collect();
    let auc = trapezoid_auc(&points);
    Ok(RocCurve { points, auc })
}

/// ROC using every distinct score as a threshold.
pub fn exact_roc(scores: &[f64], reference: &[bool]) -> Result<RocCurve> {
    let mut thresholds: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    sweep_roc(scores, reference, &thresholds)
}

/// DICE at each threshold.
pub fn sweep_dice(scores: &[f64], reference: &[bool], thresholds: &[f64]) -> Result<DiceCurve> {
    let sorted = Sorted::new(scores, reference, thresholds)?;
    Ok(DiceCurve {
        points: thresholds
            .iter()
            .map(|&t| DicePoint {
                threshold: t,
                dice: sorted.confusion(t).dice(),
            })
            .collect(),
    })
}

pub fn sweep(
    scores: &[f64],
    reference: &[bool],
    thresholds: &[f64],
    kind: CurveKind,
) -> Result<SweepCurve> {
    Ok(match kind {
        CurveKind::Roc => SweepCurve::Roc(sweep_roc(scores, reference, thresholds)?),
        CurveKind::Dice => SweepCurve::Dice(sweep_dice(scores, reference, thresholds)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 101);
        assert_eq!((g[0], g[50], g[100]), (0.0, 0.5, 1.0));
    }

    #[test]
    fn perfect_scores() {
        let reference = [true, false, true, false, false];
        let scores: Vec<f64> = reference
            .iter()
            .map(|&r| if r { 1.0 } else { 0.0 })
            .collect();
        let roc = sweep_roc(&scores, &reference, &default_grid()).unwrap();
        assert_eq!(roc.auc, 1.0);
        let dice = sweep_dice(&scores, &reference, &default_grid()).unwrap();
        for p in &dice.points[1..] {
            assert_eq!(p.dice, Some(1.0));
        }
    }

    #[test]
    fn constant_scores_give_half() {
        let reference = [true, false, true, false];
        let roc = sweep_roc(&[0.5; 4], &reference, &default_grid()).unwrap();
        assert_eq!(roc.auc, 0.5);
        for p in &roc.points {
            assert!((p.tpr == 0.0 && p.fpr == 0.0) || (p.tpr == 1.0 && p.fpr == 1.0));
        }
    }

    #[test]
    fn one_class_reference() {
        assert!(sweep_roc(&[0.1, 0.9], &[true, true], &default_grid()).is_err());
        assert!(sweep_dice(&[0.1, 0.9], &[true, true], &default_grid()).is_ok());
    }

    #[test]
    fn threshold_grid_must_increase() {
        assert!(sweep_dice(&[0.1], &[true], &[0.5, 0.5]).is_err());
        assert!(sweep_dice(&[0.1], &[true], &[]).is_err());
    }

    #[test]
    fn monotone_with_endpoints() {
        let scores = [0.1, 0.4, 0.35, 0.8, 0.65, 0.2];
        let reference = [false, true, false, true, true, false];
        let roc = sweep_roc(&scores, &reference, &default_grid()).unwrap();
        let first = roc.points.first().unwrap();
        assert_eq!((first.tpr, first.fpr), (1.0, 1.0));
        let above = sweep_roc(&scores, &reference, &[0.81]).unwrap();
        assert_eq!((above.points[0].tpr, above.points[0].fpr), (0.0, 0.0));
        for w in roc.points.windows(2) {
            assert!(w[1].tpr <= w[0].tpr && w[1].fpr <= w[0].fpr);
        }
    }
}
