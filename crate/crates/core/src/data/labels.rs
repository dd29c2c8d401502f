use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class ids as stored in label rasters (one byte per voxel).
pub type ClassId = u8;

pub const UNLABELED: ClassId = 0;
pub const HEALTHY: ClassId = 1;
pub const FLUID: ClassId = 2;
pub const EDEMA: ClassId = 3;
pub const ACTIVE: ClassId = 4;
pub const NECROSIS: ClassId = 5;
/// Fused two-class label for edema, active tumor and necrosis.
pub const TUMOROUS: ClassId = 6;

pub fn validate_class_id(id: ClassId) -> Result<ClassId> {
    if id <= TUMOROUS {
        Ok(id)
    } else {
        Err(Error::data(format!("unknown class id {id}")))
    }
}

/// True for every id that fuses to [`TUMOROUS`].
pub fn is_tumorous(id: ClassId) -> bool {
    matches!(id, EDEMA | ACTIVE | NECROSIS | TUMOROUS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClassMode {
    #[default]
    TwoClass,
    FiveClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FusionStage {
    #[default]
    BeforeTraining,
    AfterPrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct LabelScheme {
    pub mode: ClassMode,
    pub fusion_stage: FusionStage,
}

impl LabelScheme {
    pub fn two_class() -> Self {
        LabelScheme {
            mode: ClassMode::TwoClass,
            fusion_stage: FusionStage::BeforeTraining,
        }
    }

    pub fn five_class() -> Self {
        LabelScheme {
            mode: ClassMode::FiveClass,
            fusion_stage: FusionStage::AfterPrediction,
        }
    }
}

pub fn fuse_label(id: ClassId, mode: ClassMode) -> Result<ClassId> {
    validate_class_id(id)?;
    Ok(match mode {
        ClassMode::FiveClass => id,
        ClassMode::TwoClass => match id {
            UNLABELED => UNLABELED,
            HEALTHY | FLUID => HEALTHY,
            _ => TUMOROUS,
        },
    })
}

/// Apply the label scheme's class mode. Two-class fusion maps healthy and
/// fluid to healthy and every tumor compartment to tumorous; unlabeled stays 0.
pub fn fuse_labels(labels: &[ClassId], scheme: LabelScheme) -> Result<Vec<ClassId>> {
    labels
        .iter()
        .map(|&id| fuse_label(id, scheme.mode))
        .collect()
}
