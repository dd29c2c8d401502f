//! Segmentation metrics, threshold sweeps and multi-rater fusion.

mod metrics;
mod raters;
mod summary;
mod sweep;

pub use metrics::{confusion_metrics, Confusion, MetricsReport};
pub use raters::rater_majority_vote;
pub use summary::{loocv_report, LoocvSummary, MetricSummary, PatientRow};
pub use sweep::{
    default_grid, exact_roc, sweep, sweep_dice, sweep_roc, trapezoid_auc, CurveKind, DiceCurve,
    DicePoint, RocCurve, RocPoint, SweepCurve,
};
