use serde::{Deserialize, Serialize};

use crate::data::{Channel, ClassId, PatientVolume, HEALTHY, TUMOROUS, UNLABELED};
use crate::error::{Error, Result};

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }
}

/// Intensity level of a toy pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ToyLevel {
    DarkLeft,
    DarkRight,
    Bright,
}

/// A two-region image (left/right) with salt noise and one rectangular sparse
/// annotation per half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub width: usize,
    pub height: usize,
    pub left_intensity: f32,
    pub right_intensity: f32,
    pub bright_intensity: f32,
    /// `(x, y)` coordinates of the bright pixels.
    pub salt_pixels: Vec<(usize, usize)>,
    pub sur_left: Rect,
    pub sur_right: Rect,
    /// One-hot intensity-level features instead of the raw intensity.
    pub encode_indicators: bool,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            width: 10,
            height: 10,
            left_intensity: 0.2,
            right_intensity: 0.8,
            bright_intensity: 1.0,
            // Five on the left half, four on the right; (2,3), (3,5) and (7,6)
            // fall inside the annotations.
            salt_pixels: vec![
                (2, 3),
                (3, 5),
                (0, 8),
                (4, 1),
                (1, 7),
                (7, 6),
                (5, 0),
                (9, 3),
                (6, 9),
            ],
            sur_left: Rect {
                x0: 1,
                y0: 2,
                x1: 3,
                y1: 5,
            },
            sur_right: Rect {
                x0: 6,
                y0: 4,
                x1: 8,
                y1: 7,
            },
            encode_indicators: true,
        }
    }
}

const N_SALT: usize = 9;
const N_SALT_IN_SUR: usize = 3;

impl ToyConfig {
    fn half(&self) -> usize {
        self.width / 2
    }

    pub fn is_left(&self, x: usize) -> bool {
        x < self.half()
    }

    pub fn in_sur(&self, x: usize, y: usize) -> bool {
        self.sur_left.contains(x, y) || self.sur_right.contains(x, y)
    }

    pub fn level(&self, x: usize, y: usize) -> ToyLevel {
        if self.salt_pixels.contains(&(x, y)) {
            ToyLevel::Bright
        } else if self.is_left(x) {
            ToyLevel::DarkLeft
        } else {
            ToyLevel::DarkRight
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(format!("toy: {m}")));
        if self.width < 6 || self.height < 3 || !self.width.is_multiple_of(2) {
            return bad("image must be at least 6x3 with an even width");
        }
        let (l, r, b) = (
            self.left_intensity,
            self.right_intensity,
            self.bright_intensity,
        );
        if l == r || l == b || r == b {
            return bad("the three intensities must be distinct");
        }
        let mut salt = self.salt_pixels.clone();
        salt.sort_unstable();
        salt.dedup();
        if salt.len() != N_SALT || self.salt_pixels.len() != N_SALT {
            return bad("exactly 9 distinct bright pixels are required");
        }
        if salt
            .iter()
            .any(|&(x, y)| x >= self.width || y >= self.height)
        {
            return bad("bright pixel outside the image");
        }
        let h = self.half();
        let inside = |r: &Rect, lo: usize, hi: usize| {
            r.x0 <= r.x1
                && r.y0 <= r.y1
                && r.x0 > lo
                && r.x1 < hi
                && r.y0 > 0
                && r.y1 + 1 < self.height
        };
        if !inside(&self.sur_left, 0, h - 1) || !inside(&self.sur_right, h, self.width - 1) {
            return bad("annotations must lie strictly inside their halves");
        }
        let covered = salt.iter().filter(|&&(x, y)| self.in_sur(x, y)).count();
        if covered != N_SALT_IN_SUR {
            return bad("annotations must cover exactly 3 bright pixels");
        }
        Ok(())
    }
}

/// Build the toy volume (nz = 1, full brain mask). Reference labels are
/// healthy on the left half and tumorous on the right; sparse labels carry the
/// same classes inside the two annotation rectangles.
pub fn make_toy(config: &ToyConfig) -> Result<PatientVolume> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let n = w * h;
    let mut intensity = vec![0.0f32; n];
    let mut onehot = vec![vec![0.0f32; n]; 3];
    let mut labels = vec![UNLABELED; n];
    let mut sur = vec![UNLABELED; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let level = config.level(x, y);
            intensity[i] = match level {
                ToyLevel::DarkLeft => config.left_intensity,
                ToyLevel::DarkRight => config.right_intensity,
                ToyLevel::Bright => config.bright_intensity,
            };
            onehot[level as usize][i] = 1.0;
            let class: ClassId = if config.is_left(x) { HEALTHY } else { TUMOROUS };
            labels[i] = class;
            if config.in_sur(x, y) {
                sur[i] = class;
            }
        }
    }
    let channels = if config.encode_indicators {
        ["dark_left", "dark_right", "bright"]
            .iter()
            .zip(onehot)
            .map(|(name, data)| Channel {
                name: name.to_string(),
                data,
            })
            .collect()
    } else {
        vec![Channel {
            name: "intensity".into(),
            data: intensity,
        }]
    };
    PatientVolume::new(
        "toy",
        [w, h, 1],
        [1.0; 3],
        channels,
        vec![1; n],
        Some(labels),
        Some(sur),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_counts() {
        let cfg = ToyConfig::default();
        let v = make_toy(&cfg).unwrap();
        assert_eq!(v.n_in_mask(), 100);
        assert_eq!(v.channels().len(), 3);
        let bright = &v.channels()[2].data;
        assert_eq!(bright.iter().filter(|&&b| b == 1.0).count(), 9);
        let sur = v.sur_labels().unwrap();
        let covered = (0..100)
            .filter(|&i| sur[i] != 0 && bright[i] == 1.0)
            .count();
        assert_eq!(covered, 3);
    }

    #[test]
    fn raw_intensity_encoding() {
        let cfg = ToyConfig {
            encode_indicators: false,
            ..Default::default()
        };
        let v = make_toy(&cfg).unwrap();
        assert_eq!(v.channels().len(), 1);
        assert_eq!(v.channels()[0].data[0], 0.2);
    }

    #[test]
    fn invariants_enforced() {
        let mut cfg = ToyConfig::default();
        cfg.salt_pixels.pop();
        assert!(make_toy(&cfg).is_err());
        let cfg = ToyConfig {
            sur_left: Rect {
                x0: 1,
                y0: 2,
                x1: 5,
                y1: 5,
            },
            ..Default::default()
        };
        assert!(make_toy(&cfg).is_err());
        let cfg = ToyConfig {
            right_intensity: 0.2,
            ..Default::default()
        };
        assert!(make_toy(&cfg).is_err());
    }
}
