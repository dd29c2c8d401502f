use log::warn;
use serde::{Deserialize, Serialize};

use super::volume::{Channel, PatientVolume};
use crate::error::{Error, Result};

/// Parameters of the affine map `(v - mode) / sigma` applied by
/// [`mode_normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mode: f64,
    pub sigma: f64,
    /// The in-mask standard deviation was below 1e-12; `sigma` was replaced by 1.
    pub degenerate: bool,
}

const SIGMA_FLOOR: f64 = 1e-12;

/// Mode of the in-mask intensity histogram and the in-mask (population)
/// standard deviation.
///
/// The histogram has `bins` equal-width bins over `[min, max]` of the masked
/// values; the mode is the center of the most populated bin, ties going to the
/// lower bin.
pub fn normalize_values(
    values: &[f64],
    mask: &[u8],
    bins: usize,
) -> Result<(Vec<f64>, Normalization)> {
    if values.len() != mask.len() {
        return Err(Error::data(format!(
            "channel has {} voxels but mask has {}",
            values.len(),
            mask.len()
        )));
    }
    if bins < 2 {
        return Err(Error::config("histogram needs at least 2 bins"));
    }
    let inside: Vec<f64> = values
        .iter()
        .zip(mask)
        .filter_map(|(&v, &m)| (m == 1).then_some(v))
        .collect();
    if inside.len() < 2 {
        return Err(Error::data("normalization needs at least 2 in-mask voxels"));
    }
    let (lo, hi) = inside
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let n = inside.len() as f64;
    let mean = inside.iter().sum::<f64>() / n;
    let var = inside.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut sigma = var.sqrt();

    let mode = if hi > lo {
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in &inside {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let mut best = 0;
        for (b, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = b;
            }
        }
        lo + (best as f64 + 0.5) * width
    } else {
        lo
    };

    let degenerate = !(sigma >= SIGMA_FLOOR);
    if degenerate {
        warn!("channel is constant inside the mask (sigma = {sigma:e}); dividing by 1");
        sigma = 1.0;
    }
    let out = values.iter().map(|&v| (v - mode) / sigma).collect();
    Ok((
        out,
        Normalization {
            mode,
            sigma,
            degenerate,
        },
    ))
}

/// Normalize one raster channel to its in-mask histogram mode and unit
/// standard deviation. Voxels outside the mask go through the same map.
pub fn mode_normalize(
    channel: &[f32],
    mask: &[u8],
    bins: usize,
) -> Result<(Vec<f32>, Normalization)> {
    let values: Vec<f64> = channel.iter().map(|&v| f64::from(v)).collect();
    let (out, norm) = normalize_values(&values, mask, bins)?;
    Ok((out.into_iter().map(|v| v as f32).collect(), norm))
}

/// Normalize every channel of a volume.
pub fn normalize_volume(
    volume: &PatientVolume,
    bins: usize,
) -> Result<(PatientVolume, Vec<Normalization>)> {
    let mut channels = Vec::with_capacity(volume.channels().len());
    let mut params = Vec::with_capacity(volume.channels().len());
    for ch in volume.channels() {
        let (data, norm) = mode_normalize(&ch.data, volume.brain_mask(), bins)?;
        channels.push(Channel {
            name: ch.name.clone(),
            data,
        });
        params.push(norm);
    }
    Ok((volume.with_channels(channels)?, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_histogram() {
        let (out, norm) = normalize_values(&[0.0, 0.0, 0.0, 10.0], &[1, 1, 1, 1], 2).unwrap();
        // Bins [0,5) and [5,10]; three zeros fall in the first, centered at 2.5.
        assert_eq!(norm.mode, 2.5);
        // Population std of {0,0,0,10}: mean 2.5, var (3*6.25 + 56.25)/4 = 18.75.
        let sigma = 18.75f64.sqrt();
        assert!((norm.sigma - sigma).abs() < 1e-12);
        assert!((out[0] - (-2.5 / sigma)).abs() < 1e-12);
        assert!((out[3] - (7.5 / sigma)).abs() < 1e-12);
    }

    #[test]
    fn constant_channel_passes_through() {
        let (out, norm) = mode_normalize(&[5.0; 6], &[1; 6], 256).unwrap();
        assert!(norm.degenerate);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ties_go_to_lower_bin() {
        let (_, norm) = normalize_values(&[0.0, 1.0], &[1, 1], 2).unwrap();
        assert_eq!(norm.mode, 0.25);
    }

    #[test]
    fn out_of_mask_voxels_use_same_map() {
        let (out, norm) = normalize_values(&[100.0, 0.0, 1.0, 4.0], &[0, 1, 1, 1], 4).unwrap();
        assert!((out[0] - (100.0 - norm.mode) / norm.sigma).abs() < 1e-12);
    }

    #[test]
    fn too_few_voxels() {
        assert!(normalize_values(&[1.0, 2.0], &[1, 0], 8).is_err());
        assert!(normalize_values(&[1.0, 2.0], &[1, 1], 1).is_err());
    }

    proptest! {
        #[test]
        fn affine_with_unit_std(
            values in proptest::collection::vec(-1e3f64..1e3, 3..200),
            bins in 2usize..300,
        ) {
            let mask = vec![1u8; values.len()];
            let (out, norm) = normalize_values(&values, &mask, bins).unwrap();
            prop_assume!(!norm.degenerate);
            let n = out.len() as f64;
            let mean = out.iter().sum::<f64>() / n;
            let var = out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-6);
            for (a, b) in [(0usize, 1usize), (1, 2), (0, values.len() - 1)] {
                let lhs = out[a] - out[b];
                let rhs = (values[a] - values[b]) / norm.sigma;
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }
        }
    }
}
