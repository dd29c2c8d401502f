use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Channel, ClassId, PatientVolume, SampleTable, HEALTHY, TUMOROUS, UNLABELED};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normal1 {
    pub mean: f64,
    pub std: f64,
}

impl Normal1 {
    pub const fn new(mean: f64, std: f64) -> Self {
        Normal1 { mean, std }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -0.5 * z * z - self.std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    fn sampler(&self) -> Result<Normal<f64>> {
        Normal::new(self.mean, self.std).map_err(|e| {
            Error::config(format!(
                "invalid normal N({}, {}): {e}",
                self.mean, self.std
            ))
        })
    }
}

/// Covariate-shift benchmark. Feature vectors are drawn i.i.d. per coordinate
/// from the `train` or `test` marginal; labels follow a shared posterior
/// `P(B | x)` derived from the class-conditional normals on the first
/// coordinate, so only `P(x)` differs between the two samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianShiftConfig {
    pub d: usize,
    /// Class A (healthy) conditional of the first coordinate.
    pub class_a: Normal1,
    /// Class B (tumorous) conditional of the first coordinate.
    pub class_b: Normal1,
    pub prior_b: f64,
    pub train: Normal1,
    pub test: Normal1,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for GaussianShiftConfig {
    fn default() -> Self {
        GaussianShiftConfig {
            d: 1,
            class_a: Normal1::new(0.5, 0.6),
            class_b: Normal1::new(0.5, 2.0),
            prior_b: 0.5,
            train: Normal1::new(0.0, 1.0),
            test: Normal1::new(1.0, 1.0),
            n_train: 1000,
            n_test: 10_000,
            seed: 0,
        }
    }
}

impl GaussianShiftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("gaussian: d must be at least 1"));
        }
        for (name, n) in [
            ("class_a", self.class_a),
            ("class_b", self.class_b),
            ("train", self.train),
            ("test", self.test),
        ] {
            if !(n.std > 0.0) || !n.mean.is_finite() || !n.std.is_finite() {
                return Err(Error::config(format!(
                    "gaussian: {name} must have finite mean and positive std"
                )));
            }
        }
        if !(self.prior_b > 0.0 && self.prior_b < 1.0) {
            return Err(Error::config("gaussian: prior_b must lie in (0, 1)"));
        }
        if self.n_train < 10 || self.n_test < 10 {
            return Err(Error::config(format!(
                "gaussian: n_train and n_test must be at least 10, got {} and {}",
                self.n_train, self.n_test
            )));
        }
        Ok(())
    }

    pub fn patient_id(&self) -> String {
        format!("gaussian-{}", self.seed)
    }
}

/// Shared posterior `P(B | x)`, evaluated on the first coordinate.
pub fn posterior_b(x0: f64, config: &GaussianShiftConfig) -> f64 {
    let lb = config.prior_b.ln() + config.class_b.ln_pdf(x0);
    let la = (1.0 - config.prior_b).ln() + config.class_a.ln_pdf(x0);
    1.0 / (1.0 + (la - lb).exp())
}

/// `ln[p_test(x) / p_train(x)]` summed over coordinates.
pub fn analytic_log_ratio(x: &[f64], config: &GaussianShiftConfig) -> f64 {
    x.iter()
        .map(|&v| config.test.ln_pdf(v) - config.train.ln_pdf(v))
        .sum()
}

fn label_for<R: Rng>(rng: &mut R, x0: f64, config: &GaussianShiftConfig) -> ClassId {
    if rng.random::<f64>() < posterior_b(x0, config) {
        TUMOROUS
    } else {
        HEALTHY
    }
}

fn draw_table<R: Rng>(
    rng: &mut R,
    marginal: &Normal<f64>,
    n: usize,
    config: &GaussianShiftConfig,
    pid: &Arc<str>,
) -> Result<SampleTable> {
    let mut table = SampleTable::new(config.d);
    let mut row = vec![0.0; config.d];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = marginal.sample(rng);
        }
        let label = label_for(rng, row[0], config);
        table.push(&row, label, 1.0, pid.clone(), -1)?;
    }
    Ok(table)
}

/// Labeled `(train, test)` tables drawn from the configured marginals.
pub fn make_gaussian_shift(config: &GaussianShiftConfig) -> Result<(SampleTable, SampleTable)> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let pid: Arc<str> = Arc::from(config.patient_id());
    let train = draw_table(
        &mut rng,
        &config.train.sampler()?,
        config.n_train,
        config,
        &pid,
    )?;
    let test = draw_table(
        &mut rng,
        &config.test.sampler()?,
        config.n_test,
        config,
        &pid,
    )?;
    Ok((train, test))
}

/// A one-dimensional "patient" of `n_test` voxels drawn from the test
/// marginal, fully labeled, with a biased sparse annotation: voxel `x` is
/// annotated with probability `min(1, (n_train / n_test) p_train(x) / p_test(x))`.
pub fn make_gaussian_patient(
    config: &GaussianShiftConfig,
    patient_id: &str,
) -> Result<PatientVolume> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let test = config.test.sampler()?;
    let n = config.n_test;
    let kappa = config.n_train as f64 / config.n_test as f64;
    let mut channels: Vec<Vec<f32>> = vec![vec![0.0; n]; config.d];
    let mut labels = vec![UNLABELED; n];
    let mut sur = vec![UNLABELED; n];
    let mut row = vec![0.0; config.d];
    for i in 0..n {
        for v in row.iter_mut() {
            // Stored as f32; keep the value the classifier will see.
            *v = f64::from(test.sample(&mut rng) as f32);
        }
        for (ch, &v) in channels.iter_mut().zip(&row) {
            ch[i] = v as f32;
        }
        labels[i] = label_for(&mut rng, row[0], config);
        let accept = (kappa * (-analytic_log_ratio(&row, config)).exp()).min(1.0);
        if rng.random::<f64>() < accept {
            sur[i] = labels[i];
        }
    }
    if sur.iter().all(|&s| s == UNLABELED) {
        return Err(Error::data(format!(
            "{patient_id}: biased sampling selected no voxels"
        )));
    }
    let channels = channels
        .into_iter()
        .enumerate()
        .map(|(k, data)| Channel {
            name: format!("x{k}"),
            data,
        })
        .collect();
    PatientVolume::new(
        patient_id,
        [n, 1, 1],
        [1.0; 3],
        channels,
        vec![1; n],
        Some(labels),
        Some(sur),
    )
}

/// `n_patients` independent patients; patient `i` uses seed
/// `derive_seed(config.seed, i)`.
pub fn make_gaussian_dataset(
    config: &GaussianShiftConfig,
    n_patients: usize,
) -> Result<Vec<PatientVolume>> {
    (0..n_patients)
        .map(|i| {
            let cfg = GaussianShiftConfig {
                seed: derive_seed(config.seed, i as u64),
                ..config.clone()
            };
            make_gaussian_patient(&cfg, &format!("gauss{i:02}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_ratio() {
        let cfg = GaussianShiftConfig::default();
        assert!(analytic_log_ratio(&[0.5], &cfg).abs() < 1e-15);
        assert!((analytic_log_ratio(&[1.5], &cfg) - 1.0).abs() < 1e-15);
        for x in [-3.0, -0.2, 0.0, 2.7] {
            assert!((analytic_log_ratio(&[x], &cfg) - (x - 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GaussianShiftConfig {
            n_train: 50,
            n_test: 80,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(
            make_gaussian_shift(&cfg).unwrap(),
            make_gaussian_shift(&cfg).unwrap()
        );
        let other = GaussianShiftConfig {
            seed: 10,
            ..cfg.clone()
        };
        assert_ne!(
            make_gaussian_shift(&cfg).unwrap().0,
            make_gaussian_shift(&other).unwrap().0
        );
    }

    #[test]
    fn empty_train_rejected() {
        let cfg = GaussianShiftConfig {
            n_train: 0,
            ..Default::default()
        };
        assert!(make_gaussian_shift(&cfg).is_err());
    }

    #[test]
    fn train_mean_within_standard_error() {
        let cfg = GaussianShiftConfig {
            n_train: 10_000,
            n_test: 10,
            seed: 3,
            ..Default::default()
        };
        let (train, _) = make_gaussian_shift(&cfg).unwrap();
        let mean = train.features().iter().sum::<f64>() / train.len() as f64;
        assert!((mean - cfg.train.mean).abs() < 4.0 * cfg.train.std / (10_000f64).sqrt());
    }

    #[test]
    fn patient_annotation_is_biased_left() {
        let cfg = GaussianShiftConfig {
            n_train: 300,
            n_test: 3000,
            seed: 1,
            ..Default::default()
        };
        let v = make_gaussian_patient(&cfg, "g").unwrap();
        let x = &v.channels()[0].data;
        let sur = v.sur_labels().unwrap();
        let picked: Vec<f64> = (0..x.len())
            .filter(|&i| sur[i] != 0)
            .map(|i| f64::from(x[i]))
            .collect();
        let mean = picked.iter().sum::<f64>() / picked.len() as f64;
        assert!(mean < 0.3, "annotated mean {mean}");
        assert!((200..400).contains(&picked.len()));
    }
}
