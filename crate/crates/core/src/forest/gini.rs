use crate::error::{Error, Result};

/// Weighted Gini impurity `1 - sum_y (W_y / W)^2`, where `W_y` is the weight
/// mass of class `y` in the node.
pub fn weighted_gini(class_weight_sums: &[f64]) -> Result<f64> {
    let total: f64 = class_weight_sums.iter().sum();
    if !(total > 0.0) {
        return Err(Error::data("Gini impurity of an empty node is undefined"));
    }
    if class_weight_sums.iter().any(|w| *w < 0.0) {
        return Err(Error::data("class weight sums must be nonnegative"));
    }
    Ok(gini_of_total(class_weight_sums, total))
}

#[inline]
pub(crate) fn gini_of_total(sums: &[f64], total: f64) -> f64 {
    let sq: f64 = sums.iter().map(|w| (w / total) * (w / total)).sum();
    (1.0 - sq).max(0.0)
}
