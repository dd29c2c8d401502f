use crate::error::{Error, Result};

/// Voxel-wise majority of several binary segmentations: positive iff strictly
/// more than half of the raters marked the voxel. With an even number of
/// raters, an exact tie is negative.
pub fn rater_majority_vote(segmentations: &[&[bool]]) -> Result<Vec<bool>> {
    if segmentations.len() < 2 {
        return Err(Error::data(
            "majority vote needs at least two segmentations",
        ));
    }
    let n = segmentations[0].len();
    if let Some(bad) = segmentations.iter().find(|s| s.len() != n) {
        return Err(Error::data(format!(
            "misaligned masks: {} vs {} voxels",
            n,
            bad.len()
        )));
    }
    let k = segmentations.len();
    Ok((0..n)
        .map(|i| 2 * segmentations.iter().filter(|s| s[i]).count() > k)
        .collect())
}
