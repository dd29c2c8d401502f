use crate::data::SampleTable;
use crate::error::{Error, Result};

/// Design rows for the train-vs-test discriminator: every annotated row with
/// `z = 1` followed by every whole-volume row with `z = 0`. Annotated voxels
/// are part of the volume, so they appear in both halves.
#[derive(Debug, Clone)]
pub struct DiscriminationSet {
    pub d: usize,
    /// Row-major, `(n_train + n_test) x d`, no intercept column.
    pub design: Vec<f64>,
    pub z: Vec<bool>,
    pub n_train: usize,
    pub n_test: usize,
}

impl DiscriminationSet {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

pub fn build_discrimination_set(
    sur: &SampleTable,
    all_voxels: &SampleTable,
) -> Result<DiscriminationSet> {
    if sur.is_empty() {
        return Err(Error::data("sparse annotation table is empty"));
    }
    if all_voxels.is_empty() {
        return Err(Error::data("whole-volume table is empty"));
    }
    if sur.d() != all_voxels.d() {
        return Err(Error::data(format!(
            "feature-dimension mismatch: annotations have d = {}, volume has d = {}",
            sur.d(),
            all_voxels.d()
        )));
    }
    let mut design = Vec::with_capacity(sur.features().len() + all_voxels.features().len());
    design.extend_from_slice(sur.features());
    design.extend_from_slice(all_voxels.features());
    let mut z = vec![true; sur.len()];
    z.resize(sur.len() + all_voxels.len(), false);
    Ok(DiscriminationSet {
        d: sur.d(),
        design,
        z,
        n_train: sur.len(),
        n_test: all_voxels.len(),
    })
}
