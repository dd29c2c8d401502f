//! Density-ratio importance weights.
//!
//! Sparse annotations (SURs) sample the feature space very differently from
//! the whole brain volume the classifier is applied to. A logistic
//! discriminator separating annotated voxels (`z = 1`) from all in-mask voxels
//! (`z = 0`) yields the odds ratio `p(z=0|x) / p(z=1|x)`, which is turned into
//! the per-sample weight `(c * exp(-theta(x)))^lambda` without ever dividing by
//! a probability.

mod discrimination;
mod irls;
mod ratio;

pub use discrimination::{build_discrimination_set, DiscriminationSet};
pub use irls::{irls_fit, IrlsFit, IrlsParams, Standardizer};
pub use ratio::{
    compute_patient_weights, compute_table_weights, estimate_weights, DensityRatioModel,
    FitDiagnostics, WeightParams, WeightReport, WeightSidecar,
};
