use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::labels::{validate_class_id, ClassId, UNLABELED};
use crate::error::{Error, Result};

/// A named scalar raster, `nx * ny * nz` values in x-fastest order.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub data: Vec<f32>,
}

/// One patient's co-registered image channels with brain mask and optional
/// reference labels and sparse (SUR) annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientVolume {
    patient_id: String,
    dims: [usize; 3],
    spacing: [f64; 3],
    channels: Vec<Channel>,
    brain_mask: Vec<u8>,
    labels: Option<Vec<ClassId>>,
    sur_labels: Option<Vec<ClassId>>,
}

impl PatientVolume {
    /// Build a volume, checking that every raster has `nx*ny*nz` entries, the
    /// mask is binary, and every labeled voxel lies inside the mask.
    pub fn new(
        patient_id: impl Into<String>,
        dims: [usize; 3],
        spacing: [f64; 3],
        channels: Vec<Channel>,
        brain_mask: Vec<u8>,
        labels: Option<Vec<ClassId>>,
        sur_labels: Option<Vec<ClassId>>,
    ) -> Result<Self> {
        let patient_id = patient_id.into();
        if dims.contains(&0) {
            return Err(Error::data(format!(
                "{patient_id}: dims must be positive, got {dims:?}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        for ch in &channels {
            if ch.data.len() != n {
                return Err(Error::data(format!(
                    "raster size mismatch: channel '{}' has {} voxels, expected {n}",
                    ch.name,
                    ch.data.len()
                )));
            }
        }
        if brain_mask.len() != n {
            return Err(Error::data(format!(
                "raster size mismatch: brain mask has {} voxels, expected {n}",
                brain_mask.len()
            )));
        }
        if let Some(i) = brain_mask.iter().position(|&m| m > 1) {
            return Err(Error::data(format!(
                "brain mask value {} at voxel {i} is not 0/1",
                brain_mask[i]
            )));
        }
        for (what, raster) in [("labels", &labels), ("sur_labels", &sur_labels)] {
            let Some(raster) = raster else { continue };
            if raster.len() != n {
                return Err(Error::data(format!(
                    "raster size mismatch: {what} has {} voxels, expected {n}",
                    raster.len()
                )));
            }
            for (i, &label) in raster.iter().enumerate() {
                validate_class_id(label)
                    .map_err(|e| Error::data(format!("{what} voxel {i}: {e}")))?;
                if label != UNLABELED && brain_mask[i] == 0 {
                    return Err(Error::data(format!(
                        "{what}: labeled voxel {i} lies outside the brain mask"
                    )));
                }
            }
        }
        Ok(PatientVolume {
            patient_id,
            dims,
            spacing,
            channels,
            brain_mask,
            labels,
            sur_labels,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn n_voxels(&self) -> usize {
        self.brain_mask.len()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn brain_mask(&self) -> &[u8] {
        &self.brain_mask
    }

    pub fn labels(&self) -> Option<&[ClassId]> {
        self.labels.as_deref()
    }

    pub fn sur_labels(&self) -> Option<&[ClassId]> {
        self.sur_labels.as_deref()
    }

    /// Indices of voxels inside the brain mask, ascending.
    pub fn mask_indices(&self) -> Vec<usize> {
        self.brain_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| (m == 1).then_some(i))
            .collect()
    }

    pub fn n_in_mask(&self) -> usize {
        self.brain_mask.iter().filter(|&&m| m == 1).count()
    }

    /// Replace the channel rasters, keeping mask and labels.
    pub fn with_channels(&self, channels: Vec<Channel>) -> Result<Self> {
        PatientVolume::new(
            self.patient_id.clone(),
            self.dims,
            self.spacing,
            channels,
            self.brain_mask.clone(),
            self.labels.clone(),
            self.sur_labels.clone(),
        )
    }

    pub fn with_sur_labels(&self, sur_labels: Option<Vec<ClassId>>) -> Result<Self> {
        PatientVolume::new(
            self.patient_id.clone(),
            self.dims,
            self.spacing,
            self.channels.clone(),
            self.brain_mask.clone(),
            self.labels.clone(),
            sur_labels,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub name: String,
    pub file: String,
}

/// On-disk `patient.json` layout. File names are resolved relative to the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientManifest {
    pub patient_id: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub channels: Vec<ChannelEntry>,
    pub brain_mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sur_labels: Option<String>,
}

impl PatientManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Manifest {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Every raster file the manifest references, resolved against `base`.
    pub fn raster_paths(&self, base: &Path) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self.channels.iter().map(|c| base.join(&c.file)).collect();
        out.push(base.join(&self.brain_mask));
        out.extend(self.labels.iter().map(|f| base.join(f)));
        out.extend(self.sur_labels.iter().map(|f| base.join(f)));
        out
    }
}

fn read_bytes(path: &Path, expected: usize) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected {
        return Err(Error::data(format!(
            "raster size mismatch: {} holds {} bytes, expected {expected}",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes)
}

fn read_f32_raster(path: &Path, n: usize) -> Result<Vec<f32>> {
    let bytes = read_bytes(path, n * 4)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Little-endian bytes of a float raster.
pub fn f32_raster_bytes(data: &[f32]) -> Vec<u8> {
    data.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Resolve a path argument that may be a manifest file or its directory.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("patient.json")
    } else {
        path.to_path_buf()
    }
}

/// Load a patient from its `patient.json` manifest (or the directory holding it).
pub fn load_patient(path: impl AsRef<Path>) -> Result<PatientVolume> {
    let path = manifest_path(path.as_ref());
    let manifest = PatientManifest::read(&path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let n = manifest.dims.iter().product::<usize>();
    let channels = manifest
        .channels
        .iter()
        .map(|c| {
            Ok(Channel {
                name: c.name.clone(),
                data: read_f32_raster(&base.join(&c.file), n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let brain_mask = read_bytes(&base.join(&manifest.brain_mask), n)?;
    let labels = manifest
        .labels
        .as_ref()
        .map(|f| read_bytes(&base.join(f), n))
        .transpose()?;
    let sur_labels = manifest
        .sur_labels
        .as_ref()
        .map(|f| read_bytes(&base.join(f), n))
        .transpose()?;
    PatientVolume::new(
        manifest.patient_id,
        manifest.dims,
        manifest.spacing,
        channels,
        brain_mask,
        labels,
        sur_labels,
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Write `patient.json` plus one raster file per channel/mask into `dir`.
/// Returns the manifest path.
pub fn save_patient(volume: &PatientVolume, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut channels = Vec::with_capacity(volume.channels.len());
    for (i, ch) in volume.channels.iter().enumerate() {
        let file = format!("ch{i:02}_{}.f32", sanitize(&ch.name));
        write_file(&dir.join(&file), &f32_raster_bytes(&ch.data))?;
        channels.push(ChannelEntry {
            name: ch.name.clone(),
            file,
        });
    }
    write_file(&dir.join("brain_mask.u8"), &volume.brain_mask)?;
    let labels = match &volume.labels {
        Some(l) => {
            write_file(&dir.join("labels.u8"), l)?;
            Some("labels.u8".to_string())
        }
        None => None,
    };
    let sur_labels = match &volume.sur_labels {
        Some(l) => {
            write_file(&dir.join("sur_labels.u8"), l)?;
            Some("sur_labels.u8".to_string())
        }
        None => None,
    };
    let manifest = PatientManifest {
        patient_id: volume.patient_id.clone(),
        dims: volume.dims,
        spacing: volume.spacing,
        channels,
        brain_mask: "brain_mask.u8".into(),
        labels,
        sur_labels,
    };
    let path = dir.join("patient.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    write_file(&path, text.as_bytes())?;
    Ok(path)
}
