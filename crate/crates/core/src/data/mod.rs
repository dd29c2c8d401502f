//! Patient volumes, sample tables, label fusion and normalization.

mod features;
mod labels;
mod normalize;
mod volume;

pub use features::{extract_features, LabelSource, Region, SampleTable};
pub use labels::{
    fuse_label, fuse_labels, is_tumorous, validate_class_id, ClassId, ClassMode, FusionStage,
    LabelScheme, ACTIVE, EDEMA, FLUID, HEALTHY, NECROSIS, TUMOROUS, UNLABELED,
};
pub use normalize::{mode_normalize, normalize_values, normalize_volume, Normalization};
pub use volume::{
    f32_raster_bytes, load_patient, manifest_path, save_patient, Channel, ChannelEntry,
    PatientManifest, PatientVolume,
};
