use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::loocv::run_loocv_on;
use crate::data::PatientVolume;
use crate::error::{Error, Result};
use crate::forest::ForestParams;

/// Mean DICE of one leave-one-patient-out run at a swept parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_dice: Option<f64>,
    pub std_err: Option<f64>,
    pub n_folds: usize,
}

fn row(config: &RunConfig, patients: &[PatientVolume], value: f64) -> Result<SweepRow> {
    let out = run_loocv_on(config, patients)?;
    let dice = out.summary.as_ref().map(|s| s.dice);
    Ok(SweepRow {
        value,
        mean_dice: dice.and_then(|d| d.mean),
        std_err: dice.and_then(|d| d.std_err()),
        n_folds: out.folds.len(),
    })
}

/// One leave-one-patient-out run per lambda, all other settings fixed.
pub fn run_lambda_sweep(
    config: &RunConfig,
    patients: &[PatientVolume],
    lambdas: &[f64],
) -> Result<Vec<SweepRow>> {
    if !config.method.uses_weights() {
        return Err(Error::config(format!(
            "a lambda sweep needs a weighted method (DALSA or DALCA_sampled), got {}",
            config.method
        )));
    }
    lambdas
        .iter()
        .map(|&lambda| {
            row(
                &RunConfig {
                    lambda,
                    ..config.clone()
                },
                patients,
                lambda,
            )
        })
        .collect()
}

/// One leave-one-patient-out run per maximum tree depth.
pub fn run_depth_sweep(
    config: &RunConfig,
    patients: &[PatientVolume],
    depths: &[usize],
) -> Result<Vec<SweepRow>> {
    depths
        .iter()
        .map(|&max_depth| {
            let cfg = RunConfig {
                forest: ForestParams {
                    max_depth,
                    ..config.forest.clone()
                },
                ..config.clone()
            };
            row(&cfg, patients, max_depth as f64)
        })
        .collect()
}

/// Row with the highest mean DICE; ties go to the earliest row, so a depth
/// sweep over an ascending grid reports the lowest depth.
pub fn best_row(rows: &[SweepRow]) -> Option<SweepRow> {
    let mut best: Option<SweepRow> = None;
    for r in rows {
        let Some(d) = r.mean_dice else { continue };
        if best.is_none_or(|b| d > b.mean_dice.unwrap_or(f64::NEG_INFINITY)) {
            best = Some(*r);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_row_prefers_first_on_ties() {
        let r = |value, d| SweepRow {
            value,
            mean_dice: Some(d),
            std_err: None,
            n_folds: 2,
        };
        let rows = [r(1.0, 0.8), r(2.0, 0.9), r(3.0, 0.9)];
        assert_eq!(best_row(&rows).unwrap().value, 2.0);
        assert!(best_row(&[]).is_none());
    }
}
