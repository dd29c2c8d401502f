use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use crate::error::{Error, Result};

/// Median, mean and sample (n - 1) standard deviation of the defined values
/// of one metric. `n_undefined` counts patients where the metric was undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub n_undefined: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl MetricSummary {
    pub fn from_values(values: &[Option<f64>]) -> Self {
        let mut defined: Vec<f64> = values.iter().flatten().copied().collect();
        let n = defined.len();
        let n_undefined = values.len() - n;
        if n == 0 {
            return MetricSummary {
                n,
                n_undefined,
                median: None,
                mean: None,
                std: None,
            };
        }
        defined.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            defined[n / 2]
        } else {
            0.5 * (defined[n / 2 - 1] + defined[n / 2])
        };
        let mean = defined.iter().sum::<f64>() / n as f64;
        let std = (n >= 2).then(|| {
            (defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        MetricSummary {
            n,
            n_undefined,
            median: Some(median),
            mean: Some(mean),
            std,
        }
    }

    /// Standard error of the mean, `std / sqrt(n)`.
    pub fn std_err(&self) -> Option<f64> {
        self.std.map(|s| s / (self.n as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRow {
    pub patient_id: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvSummary {
    pub n_patients: usize,
    pub dice: MetricSummary,
    pub sensitivity: MetricSummary,
    pub specificity: MetricSummary,
    pub ppv: MetricSummary,
    pub patients: Vec<PatientRow>,
}

/// Summary statistics over per-patient reports of a leave-one-patient-out run.
pub fn loocv_report(rows: &[(String, MetricsReport)]) -> Result<LoocvSummary> {
    if rows.len() < 2 {
        return Err(Error::data(format!(
            "leave-one-out summary needs at least 2 patients, got {}",
            rows.len()
        )));
    }
    let col = |f: fn(&MetricsReport) -> Option<f64>| -> MetricSummary {
        let v: Vec<Option<f64>> = rows.iter().map(|(_, r)| f(r)).collect();
        MetricSummary::from_values(&v)
    };
    Ok(LoocvSummary {
        n_patients: rows.len(),
        dice: col(|r| r.dice),
        sensitivity: col(|r| r.sensitivity),
        specificity: col(|r| r.specificity),
        ppv: col(|r| r.ppv),
        patients: rows
            .iter()
            .map(|(p, r)| PatientRow {
                patient_id: p.clone(),
                report: *r,
            })
            .collect(),
    })
}
