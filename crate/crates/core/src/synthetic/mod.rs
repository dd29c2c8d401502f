//! Deterministic synthetic data: the 100-pixel salt-noise toy image and
//! Gaussian covariate-shift benchmarks with analytic density ratios.

mod gaussian;
mod toy;

pub use gaussian::{
    analytic_log_ratio, make_gaussian_dataset, make_gaussian_patient, make_gaussian_shift,
    posterior_b, GaussianShiftConfig, Normal1,
};
pub use toy::{make_toy, Rect, ToyConfig, ToyLevel};
