use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use super::discrimination::{build_discrimination_set, DiscriminationSet};
use super::irls::{irls_fit, sigmoid, IrlsParams, Standardizer};
use crate::data::{extract_features, LabelSource, PatientVolume, Region, SampleTable};
use crate::error::{Error, Result};

const EXPONENT_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub deviance: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub ridge: f64,
}

/// Fitted logistic discriminator `theta(x) = theta_0 + sum theta_i x_i`
/// (applied to standardized features) together with the relaxation exponent
/// `lambda` and the scale constant `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRatioModel {
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub c: f64,
    pub feature_shift: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

fn check_lambda_c(lambda: f64, c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::config(format!("c must be positive, got {c}")));
    }
    Ok(())
}

impl DensityRatioModel {
    /// Standardize the discrimination set and fit `theta` by IRLS.
    pub fn fit(set: &DiscriminationSet, lambda: f64, c: f64, irls: &IrlsParams) -> Result<Self> {
        check_lambda_c(lambda, c)?;
        let std = Standardizer::fit(&set.design, set.d);
        let design = std.apply(&set.design);
        let fit = irls_fit(&design, set.d, &set.z, irls)?;
        Ok(DensityRatioModel {
            theta: fit.theta,
            lambda,
            c,
            feature_shift: std.shift,
            feature_scale: std.scale,
            diagnostics: FitDiagnostics {
                iterations: fit.iterations,
                deviance: fit.deviance,
                gradient_norm: fit.gradient_norm,
                converged: fit.converged,
                ridge: fit.ridge,
            },
        })
    }

    pub fn d(&self) -> usize {
        self.feature_shift.len()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        check_lambda_c(lambda, self.c)?;
        Ok(DensityRatioModel {
            lambda,
            ..self.clone()
        })
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        check_lambda_c(self.lambda, c)?;
        Ok(DensityRatioModel { c, ..self.clone() })
    }

    /// Linear predictor on raw (unstandardized) features.
    pub fn theta_at(&self, x: &[f64]) -> f64 {
        self.theta[0]
            + x.iter()
                .enumerate()
                .map(|(j, v)| {
                    self.theta[j + 1] * (v - self.feature_shift[j]) / self.feature_scale[j]
                })
                .sum::<f64>()
    }

    /// Estimated probability that `x` came from the annotated set.
    pub fn prob_train(&self, x: &[f64]) -> f64 {
        sigmoid(self.theta_at(x))
    }

    /// `lambda * (ln c - theta(x))`, clamped to [-700, 700].
    pub fn log_weight(&self, x: &[f64]) -> f64 {
        (self.lambda * (self.c.ln() - self.theta_at(x))).clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP)
    }

    pub fn weight(&self, x: &[f64]) -> f64 {
        self.log_weight(x).exp()
    }
}

/// Importance weight of every row in `samples`.
pub fn estimate_weights(model: &DensityRatioModel, samples: &SampleTable) -> Result<Vec<f64>> {
    if samples.d() != model.d() {
        return Err(Error::data(format!(
            "weight model expects d = {}, table has d = {}",
            model.d(),
            samples.d()
        )));
    }
    Ok((0..samples.len())
        .map(|i| model.weight(samples.row(i)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightParams {
    pub lambda: f64,
    pub c: f64,
    pub irls: IrlsParams,
    /// Relative tolerance on `|sum w - c n_test| / (c n_test)` before warning.
    pub sum_tolerance: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams {
            lambda: 1.0,
            c: 1.0,
            irls: IrlsParams::default(),
            sum_tolerance: 0.01,
        }
    }
}

/// Weights of one patient's annotated voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    pub patient_id: String,
    pub voxel_indices: Vec<i64>,
    pub weights: Vec<f64>,
    pub sum_weights: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub lambda: f64,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `|sum w - c n_test| / (c n_test)`.
    pub sum_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSidecar {
    pub patient_id: String,
    pub n_train: usize,
    pub n_test: usize,
    pub lambda: f64,
    pub c: f64,
    pub sum_weights: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl WeightReport {
    pub fn sidecar(&self) -> WeightSidecar {
        WeightSidecar {
            patient_id: self.patient_id.clone(),
            n_train: self.n_train,
            n_test: self.n_test,
            lambda: self.lambda,
            c: self.c,
            sum_weights: self.sum_weights,
            converged: self.converged,
            iterations: self.iterations,
        }
    }

    /// `voxel_index,weight` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "voxel_index,weight")?;
        for (v, w) in self.voxel_indices.iter().zip(&self.weights) {
            writeln!(out, "{v},{w}")?;
        }
        Ok(())
    }

    /// Full-volume float raster, zero outside the annotated voxels.
    pub fn to_raster(&self, n_voxels: usize) -> Vec<f32> {
        let mut out = vec![0.0f32; n_voxels];
        for (&v, &w) in self.voxel_indices.iter().zip(&self.weights) {
            if v >= 0 && (v as usize) < n_voxels {
                out[v as usize] = w as f32;
            }
        }
        out
    }
}

/// Fit the discriminator between `sur` (training) and `all_voxels` (test) rows
/// and weight the `sur` rows.
pub fn compute_table_weights(
    sur: &SampleTable,
    all_voxels: &SampleTable,
    params: &WeightParams,
    patient_id: &str,
) -> Result<(DensityRatioModel, WeightReport)> {
    let set = build_discrimination_set(sur, all_voxels)?;
    let model = DensityRatioModel::fit(&set, params.lambda, params.c, &params.irls)?;
    let weights = estimate_weights(&model, sur)?;
    let sum_weights: f64 = weights.iter().sum();
    let target = params.c * set.n_test as f64;
    let sum_deviation = (sum_weights - target).abs() / target;
    if params.lambda == 1.0 && sum_deviation > params.sum_tolerance {
        warn!(
            "{patient_id}: sum of weights {sum_weights:.6} deviates from c * n_test = {target} by {:.3}%",
            100.0 * sum_deviation
        );
    }
    let report = WeightReport {
        patient_id: patient_id.to_string(),
        voxel_indices: sur.voxel_indices().to_vec(),
        weights,
        sum_weights,
        n_train: set.n_train,
        n_test: set.n_test,
        lambda: params.lambda,
        c: params.c,
        converged: model.diagnostics.converged,
        iterations: model.diagnostics.iterations,
        sum_deviation,
    };
    Ok((model, report))
}

/// Weights for one patient, using only that patient's annotations and brain
/// mask.
pub fn compute_patient_weights(
    volume: &PatientVolume,
    params: &WeightParams,
) -> Result<WeightReport> {
    let sur = extract_features(volume, Region::LabeledVoxelsOnly(LabelSource::Sparse))?;
    let all = extract_features(volume, Region::AllBrainVoxels)?;
    compute_table_weights(&sur, &all, params, volume.patient_id()).map(|(_, r)| r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(theta: Vec<f64>, lambda: f64, c: f64) -> DensityRatioModel {
        let d = theta.len() - 1;
        DensityRatioModel {
            theta,
            lambda,
            c,
            feature_shift: vec![0.0; d],
            feature_scale: vec![1.0; d],
            diagnostics: FitDiagnostics {
                iterations: 0,
                deviance: 0.0,
                gradient_norm: 0.0,
                converged: true,
                ridge: 0.0,
            },
        }
    }

    #[test]
    fn bright_pixel_weight() {
        // p(z=1 | bright) = 3/12.
        let theta = (0.25f64 / 0.75).ln();
        let m = model(vec![theta], 1.0, 1.0);
        assert!((m.weight(&[]) - 3.0).abs() < 1e-4);
    }

    #[test]
    fn lambda_zero_gives_unit_weights() {
        let m = model(vec![3.7, -12.0], 0.0, 5.0);
        for x in [-100.0, 0.0, 1e6] {
            assert_eq!(m.weight(&[x]), 1.0);
        }
    }

    #[test]
    fn identity_point() {
        let m = model(vec![0.0, 1.0], 1.0, 1.0);
        assert_eq!(m.weight(&[0.0]), 1.0);
    }

    #[test]
    fn extreme_theta_is_clamped() {
        let m = model(vec![0.0, 1.0], 1.0, 1.0);
        assert!(m.weight(&[-1e6]).is_finite());
        assert!(m.weight(&[1e6]) >= 0.0);
    }

    #[test]
    fn lambda_and_c_are_validated() {
        let m = model(vec![0.0], 1.0, 1.0);
        assert!(m.with_lambda(1.5).is_err());
        assert!(m.with_c(0.0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let m = model(vec![0.0, 1.0], 1.0, 1.0);
        let t = SampleTable::from_rows(2, vec![0.0; 4], vec![1, 1], "p").unwrap();
        assert!(estimate_weights(&m, &t).is_err());
    }

    #[test]
    fn uniform_annotation_gives_ratio_weights() {
        // Constant feature: the fit is effectively intercept-only.
        let all = SampleTable::from_rows(1, vec![1.0; 100], vec![0; 100], "p").unwrap();
        let sur = all.select(&(0..10).collect::<Vec<_>>());
        let (_, report) = compute_table_weights(&sur, &all, &WeightParams::default(), "p").unwrap();
        for w in &report.weights {
            assert!((w - 10.0).abs() < 1e-6, "{w}");
        }
        assert!((report.sum_weights - 100.0).abs() < 1e-5);
    }

    proptest::proptest! {
        #[test]
        fn weights_monotone_in_lambda(theta0 in -5.0f64..5.0, slope in -3.0f64..3.0, x in -3.0f64..3.0) {
            let base = model(vec![theta0, slope], 1.0, 1.0);
            let w1 = base.weight(&[x]);
            let mut prev = 1.0;
            for k in 0..=10 {
                let w = base.with_lambda(k as f64 / 10.0).unwrap().weight(&[x]);
                if w1 > 1.0 {
                    proptest::prop_assert!(w >= prev - 1e-12 * prev);
                } else if w1 < 1.0 {
                    proptest::prop_assert!(w <= prev + 1e-12 * prev);
                }
                prev = w;
            }
        }

        #[test]
        fn scaling_c_scales_weights(theta0 in -5.0f64..5.0, k in 0.01f64..100.0, lambda in 0.0f64..=1.0) {
            let base = model(vec![theta0], lambda, 1.0);
            let scaled = base.with_c(k).unwrap();
            let expected = base.weight(&[]) * k.powf(lambda);
            proptest::prop_assert!((scaled.weight(&[]) - expected).abs() <= 1e-12 * expected);
        }
    }
}
