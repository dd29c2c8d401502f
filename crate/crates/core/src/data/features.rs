use std::io::{Read, Write};
use std::sync::Arc;

use super::labels::{validate_class_id, ClassId, UNLABELED};
use super::volume::PatientVolume;
use crate::error::{Error, Result};

/// Flattened training/prediction rows: a fixed-length feature vector, class
/// label, nonnegative weight, owning patient and source voxel per row.
///
/// Features are stored row-major. `voxel_index` is -1 for tabular rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    d: usize,
    features: Vec<f64>,
    labels: Vec<ClassId>,
    weights: Vec<f64>,
    patient_ids: Vec<Arc<str>>,
    voxel_indices: Vec<i64>,
}

impl SampleTable {
    pub fn new(d: usize) -> Self {
        SampleTable {
            d,
            features: Vec::new(),
            labels: Vec::new(),
            weights: Vec::new(),
            patient_ids: Vec::new(),
            voxel_indices: Vec::new(),
        }
    }

    /// Build a tabular table (voxel index -1, unit weights) from row-major features.
    pub fn from_rows(
        d: usize,
        features: Vec<f64>,
        labels: Vec<ClassId>,
        patient_id: &str,
    ) -> Result<Self> {
        let n = labels.len();
        if features.len() != n * d {
            return Err(Error::data(format!(
                "feature buffer has {} values, expected {n} rows x {d}",
                features.len()
            )));
        }
        let pid: Arc<str> = Arc::from(patient_id);
        Ok(SampleTable {
            d,
            features,
            labels,
            weights: vec![1.0; n],
            patient_ids: vec![pid; n],
            voxel_indices: vec![-1; n],
        })
    }

    pub fn push(
        &mut self,
        features: &[f64],
        label: ClassId,
        weight: f64,
        patient_id: Arc<str>,
        voxel_index: i64,
    ) -> Result<()> {
        if features.len() != self.d {
            return Err(Error::data(format!(
                "row has {} features, table has d = {}",
                features.len(),
                self.d
            )));
        }
        self.features.extend_from_slice(features);
        self.labels.push(label);
        self.weights.push(weight);
        self.patient_ids.push(patient_id);
        self.voxel_indices.push(voxel_index);
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn patient_id(&self, i: usize) -> &str {
        &self.patient_ids[i]
    }

    pub fn voxel_indices(&self) -> &[i64] {
        &self.voxel_indices
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::data(format!(
                "got {} weights for {} rows",
                weights.len(),
                self.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::data(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.set_weights(weights)?;
        Ok(self)
    }

    pub fn map_labels<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(ClassId) -> Result<ClassId>,
    {
        let labels = self
            .labels
            .iter()
            .map(|&l| f(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(SampleTable {
            labels,
            ..self.clone()
        })
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> SampleTable {
        let mut out = SampleTable::new(self.d);
        for &i in indices {
            out.features.extend_from_slice(self.row(i));
            out.labels.push(self.labels[i]);
            out.weights.push(self.weights[i]);
            out.patient_ids.push(self.patient_ids[i].clone());
            out.voxel_indices.push(self.voxel_indices[i]);
        }
        out
    }

    /// Append all rows of `other`.
    pub fn extend(&mut self, other: &SampleTable) -> Result<()> {
        if other.d != self.d {
            return Err(Error::data(format!(
                "feature-dimension mismatch: {} vs {}",
                self.d, other.d
            )));
        }
        self.features.extend_from_slice(&other.features);
        self.labels.extend_from_slice(&other.labels);
        self.weights.extend_from_slice(&other.weights);
        self.patient_ids.extend(other.patient_ids.iter().cloned());
        self.voxel_indices.extend_from_slice(&other.voxel_indices);
        Ok(())
    }

    pub fn concat<'a>(d: usize, tables: impl IntoIterator<Item = &'a SampleTable>) -> Result<Self> {
        let mut out = SampleTable::new(d);
        for t in tables {
            out.extend(t)?;
        }
        Ok(out)
    }

    /// Read `f0,...,f{d-1},label[,weight]` CSV.
    pub fn read_csv<R: Read>(reader: R, patient_id: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let label_col = headers
            .iter()
            .position(|h| h == "label")
            .ok_or_else(|| Error::data("CSV header has no 'label' column"))?;
        for (i, h) in headers.iter().take(label_col).enumerate() {
            if h != format!("f{i}") {
                return Err(Error::data(format!(
                    "expected CSV column f{i}, found '{h}'"
                )));
            }
        }
        let d = label_col;
        let weight_col = match headers.len() - label_col {
            1 => None,
            2 if &headers[label_col + 1] == "weight" => Some(label_col + 1),
            _ => {
                return Err(Error::data(
                    "CSV header must be f0,...,f{d-1},label[,weight]",
                ))
            }
        };
        let pid: Arc<str> = Arc::from(patient_id);
        let mut table = SampleTable::new(d);
        let mut row = vec![0.0; d];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |col: usize| -> Result<f64> {
                rec[col].trim().parse::<f64>().map_err(|_| {
                    Error::data(format!(
                        "CSV row {}: cannot parse '{}'",
                        line + 1,
                        &rec[col]
                    ))
                })
            };
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = parse(j)?;
            }
            let label: ClassId = rec[label_col].trim().parse().map_err(|_| {
                Error::data(format!(
                    "CSV row {}: bad label '{}'",
                    line + 1,
                    &rec[label_col]
                ))
            })?;
            validate_class_id(label)?;
            let weight = match weight_col {
                Some(c) => parse(c)?,
                None => 1.0,
            };
            if !(weight >= 0.0) {
                return Err(Error::data(format!(
                    "CSV row {}: negative weight",
                    line + 1
                )));
            }
            table.push(&row, label, weight, pid.clone(), -1)?;
        }
        Ok(table)
    }

    pub fn write_csv<W: Write>(&self, writer: W, with_weights: bool) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.d).map(|i| format!("f{i}")).collect();
        header.push("label".into());
        if with_weights {
            header.push("weight".into());
        }
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.labels[i].to_string());
            if with_weights {
                rec.push(self.weights[i].to_string());
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Which label raster defines "labeled" voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    /// Complete reference annotation (`labels`).
    Reference,
    /// Sparse annotation (`sur_labels`).
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Every voxel inside the brain mask; labels copied from the reference
    /// raster when present, 0 otherwise.
    AllBrainVoxels,
    /// Only voxels carrying a nonzero label in the chosen raster.
    LabeledVoxelsOnly(LabelSource),
}

/// One row per selected in-mask voxel, features in channel order, weight 1.
pub fn extract_features(volume: &PatientVolume, region: Region) -> Result<SampleTable> {
    let d = volume.channels().len();
    let pid: Arc<str> = Arc::from(volume.patient_id());
    let (labels, labeled_only) = match region {
        Region::AllBrainVoxels => (volume.labels(), false),
        Region::LabeledVoxelsOnly(LabelSource::Reference) => (
            Some(volume.labels().ok_or_else(|| {
                Error::data(format!(
                    "{}: no reference label raster",
                    volume.patient_id()
                ))
            })?),
            true,
        ),
        Region::LabeledVoxelsOnly(LabelSource::Sparse) => (
            Some(volume.sur_labels().ok_or_else(|| {
                Error::data(format!("{}: no sparse label raster", volume.patient_id()))
            })?),
            true,
        ),
    };
    let mut table = SampleTable::new(d);
    let mut row = vec![0.0; d];
    for (i, &m) in volume.brain_mask().iter().enumerate() {
        if m != 1 {
            continue;
        }
        let label = labels.map_or(UNLABELED, |l| l[i]);
        if labeled_only && label == UNLABELED {
            continue;
        }
        for (slot, ch) in row.iter_mut().zip(volume.channels()) {
            *slot = f64::from(ch.data[i]);
        }
        table.push(&row, label, 1.0, pid.clone(), i as i64)?;
    }
    if table.is_empty() {
        return Err(Error::data(format!(
            "{}: empty selection",
            volume.patient_id()
        )));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::labels::{EDEMA, HEALTHY};
    use crate::data::volume::Channel;

    fn volume(mask: Vec<u8>, labels: Option<Vec<u8>>) -> PatientVolume {
        PatientVolume::new(
            "p",
            [4, 1, 1],
            [1.0; 3],
            vec![
                Channel {
                    name: "a".into(),
                    data: vec![1.0, 2.0, 3.0, 4.0],
                },
                Channel {
                    name: "b".into(),
                    data: vec![10.0, 20.0, 30.0, 40.0],
                },
            ],
            mask,
            labels,
            None,
        )
        .unwrap()
    }

    #[test]
    fn all_brain_voxels() {
        let t = extract_features(&volume(vec![1; 4], None), Region::AllBrainVoxels).unwrap();
        assert_eq!((t.len(), t.d()), (4, 2));
        assert_eq!(t.row(2), &[3.0, 30.0]);
        assert!(t.labels().iter().all(|&l| l == 0));
        assert!(t.weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn labeled_only_keeps_labels() {
        let v = volume(vec![1; 4], Some(vec![HEALTHY, 0, EDEMA, HEALTHY]));
        let t = extract_features(&v, Region::LabeledVoxelsOnly(LabelSource::Reference)).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.labels(), &[HEALTHY, EDEMA, HEALTHY]);
        assert_eq!(t.voxel_indices(), &[0, 2, 3]);
    }

    #[test]
    fn empty_mask_is_error() {
        let err = extract_features(&volume(vec![0; 4], None), Region::AllBrainVoxels).unwrap_err();
        assert!(err.to_string().contains("empty selection"));
    }

    #[test]
    fn missing_sparse_raster() {
        let v = volume(vec![1; 4], None);
        assert!(extract_features(&v, Region::LabeledVoxelsOnly(LabelSource::Sparse)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let v = volume(vec![1; 4], Some(vec![HEALTHY, 1, EDEMA, HEALTHY]));
        let t = extract_features(&v, Region::AllBrainVoxels)
            .unwrap()
            .with_weights(vec![0.5, 1.0, 2.25, 3.0])
            .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f0,f1,label,weight\n"));
        let back = SampleTable::read_csv(&buf[..], "p").unwrap();
        assert_eq!(back.features(), t.features());
        assert_eq!(back.labels(), t.labels());
        assert_eq!(back.weights(), t.weights());
    }

    #[test]
    fn csv_without_weights_defaults_to_one() {
        let t = SampleTable::read_csv("f0,label\n0.5,1\n1.5,6\n".as_bytes(), "t").unwrap();
        assert_eq!(t.weights(), &[1.0, 1.0]);
        assert!(SampleTable::read_csv("x,label\n1,1\n".as_bytes(), "t").is_err());
        assert!(SampleTable::read_csv("f0,label\n1,9\n".as_bytes(), "t").is_err());
    }
}
