use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ClassMode, FusionStage, LabelScheme};
use crate::error::{Error, Result};
use crate::eval::default_grid;
use crate::forest::ForestParams;
use crate::weights::{IrlsParams, WeightParams};

/// Source and weighting of the training rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Method {
    /// Sparse annotations, unit weights.
    #[serde(rename = "LSA")]
    Lsa,
    /// Sparse annotations with density-ratio weights.
    #[serde(rename = "DALSA")]
    #[default]
    Dalsa,
    /// Every voxel of the complete annotation.
    #[serde(rename = "LCA")]
    Lca,
    /// Seeded uniform subsample of the complete annotation.
    #[serde(rename = "LCA_sampled")]
    LcaSampled,
    /// Subsample of the complete annotation with density-ratio weights.
    #[serde(rename = "DALCA_sampled")]
    DalcaSampled,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lsa,
        Method::Dalsa,
        Method::Lca,
        Method::LcaSampled,
        Method::DalcaSampled,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lsa => "LSA",
            Method::Dalsa => "DALSA",
            Method::Lca => "LCA",
            Method::LcaSampled => "LCA_sampled",
            Method::DalcaSampled => "DALCA_sampled",
        }
    }

    pub fn uses_weights(&self) -> bool {
        matches!(self, Method::Dalsa | Method::DalcaSampled)
    }

    pub fn uses_sparse_labels(&self) -> bool {
        matches!(self, Method::Lsa | Method::Dalsa)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown method '{s}' (expected LSA, DALSA, LCA, LCA_sampled or DALCA_sampled)"
                ))
            })
    }
}

/// Everything needed to reproduce a leave-one-patient-out run.
///
/// `seed` is the master seed; it overrides `forest.seed` and keys every
/// subsampling stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset_root: PathBuf,
    /// Patient subdirectories of `dataset_root`; empty means all of them.
    pub patients: Vec<String>,
    pub method: Method,
    pub label_scheme: LabelScheme,
    pub forest: ForestParams,
    pub lambda: f64,
    pub c: f64,
    pub irls: IrlsParams,
    pub sum_tolerance: f64,
    pub sample_ratio: f64,
    pub decision_threshold: f64,
    pub thresholds: Vec<f64>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Recorded in the run manifest; not measured.
    pub labeling_time_s: Option<f64>,
    pub save_models: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset_root: PathBuf::from("."),
            patients: Vec::new(),
            method: Method::Dalsa,
            label_scheme: LabelScheme::two_class(),
            forest: ForestParams::default(),
            lambda: 1.0,
            c: 1.0,
            irls: IrlsParams::default(),
            sum_tolerance: 0.01,
            sample_ratio: 0.005,
            decision_threshold: 0.5,
            thresholds: default_grid(),
            seed: 0,
            output_dir: None,
            labeling_time_s: None,
            save_models: false,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Manifest {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::config(format!("c must be positive, got {}", self.c)));
        }
        if !(self.sample_ratio > 0.0 && self.sample_ratio <= 1.0) {
            return Err(Error::config(format!(
                "sample_ratio must lie in (0, 1], got {}",
                self.sample_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(Error::config("decision_threshold must lie in [0, 1]"));
        }
        if self.thresholds.is_empty() || self.thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config(
                "thresholds must be a non-empty strictly increasing grid",
            ));
        }
        if self.label_scheme.mode == ClassMode::FiveClass
            && self.label_scheme.fusion_stage == FusionStage::BeforeTraining
        {
            return Err(Error::config(
                "five_class training cannot fuse labels before training; use fusion_stage = after_prediction",
            ));
        }
        Ok(())
    }

    pub fn weight_params(&self) -> WeightParams {
        WeightParams {
            lambda: self.lambda,
            c: self.c,
            irls: self.irls,
            sum_tolerance: self.sum_tolerance,
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            seed: self.seed,
            ..self.forest.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
        assert!("SVM".parse::<Method>().is_err());
    }

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let parsed: RunConfig =
            serde_json::from_str(r#"{"method": "LSA", "lambda": 0.5}"#).unwrap();
        assert_eq!(parsed.method, Method::Lsa);
        assert_eq!(parsed.sample_ratio, 0.005);
    }

    #[test]
    fn rejects_inconsistent_settings() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.sample_ratio = 0.0));
        assert!(bad(|c| c.sample_ratio = 1.5));
        assert!(bad(|c| c.lambda = -0.1));
        assert!(bad(|c| c.thresholds = vec![0.5, 0.2]));
        assert!(bad(|c| {
            c.label_scheme = LabelScheme {
                mode: ClassMode::FiveClass,
                fusion_stage: FusionStage::BeforeTraining,
            }
        }));
    }
}
