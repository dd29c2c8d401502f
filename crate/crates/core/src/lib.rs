//! Learning from sparse, biased annotations with importance weighting.
//!
//! The crate is organized bottom-up:
//!
//! * [`data`] holds patient volumes, sample tables, label fusion and intensity
//!   normalization.
//! * [`weights`] estimates per-sample density-ratio weights with a logistic
//!   discriminator between annotated (training) and whole-volume (test) voxels.
//! * [`forest`] is an observation-weighted random forest using weighted Gini
//!   impurity.
//! * [`eval`] computes DICE, sensitivity, specificity and threshold sweeps.
//! * [`synthetic`] generates the toy image and Gaussian covariate-shift data.
//! * [`pipeline`] ties everything into leave-one-patient-out experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod forest;
pub mod pipeline;
pub mod rng;
pub mod synthetic;
pub mod weights;

pub use data::{
    extract_features, fuse_labels, load_patient, mode_normalize, save_patient, ClassId,
    LabelScheme, PatientVolume, Region, SampleTable,
};
pub use error::{Error, Result};
pub use eval::{confusion_metrics, rater_majority_vote, MetricsReport};
pub use forest::{train_forest, weighted_gini, Forest, ForestParams, TreeNode};
pub use pipeline::{Method, RunConfig};
pub use weights::{
    compute_patient_weights, estimate_weights, irls_fit, DensityRatioModel, WeightParams,
    WeightReport,
};
