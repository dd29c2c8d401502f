use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::loocv::FoldTimings;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientTiming {
    pub patient_id: String,
    /// Feature extraction plus weight estimation.
    pub rows_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTiming {
    pub patient_id: String,
    #[serde(flatten)]
    pub timings: FoldTimings,
}

/// Resolved configuration, tool version, seeds, input checksums and per-stage
/// wall-clock timings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub forest_seed: u64,
    pub threads: usize,
    pub inputs: Vec<InputChecksum>,
    pub labeling_time_s: Option<f64>,
    pub patient_timings: Vec<PatientTiming>,
    pub fold_timings: Vec<FoldTiming>,
    pub total_s: f64,
}

impl RunManifest {
    pub fn new(config: &RunConfig, inputs: Vec<InputChecksum>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            master_seed: config.seed,
            forest_seed: config.forest_params().seed,
            threads: rayon::current_num_threads(),
            inputs,
            labeling_time_s: config.labeling_time_s,
            patient_timings: Vec::new(),
            fold_timings: Vec::new(),
            total_s: 0.0,
        }
    }
}
