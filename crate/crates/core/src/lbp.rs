//! 3×3 local binary patterns.
//!
//! Neighbors are visited clockwise from the top-left: TL, T, TR, R, BR, B,
//! BL, L, and neighbor `p` contributes `2^p` when its value is at least the
//! center's. Borders replicate the nearest pixel.

use serde::{Deserialize, Serialize};

use crate::datacube::HyperCube;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Image};
use crate::par;

/// Row/column offsets, in bit order.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

/// Which cube the pipeline feeds to the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LbpSource {
    /// Band-group averages.
    #[default]
    Grouped,
    /// Every band of the multiscale smoothed stack.
    Smoothed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LbpConfig {
    pub neighbors: usize,
    pub radius: usize,
    pub replicate_border: bool,
    pub source: LbpSource,
}

impl Default for LbpConfig {
    fn default() -> Self {
        Self {
            neighbors: 8,
            radius: 1,
            replicate_border: true,
            source: LbpSource::Grouped,
        }
    }
}

impl LbpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighbors != 8 || self.radius != 1 || !self.replicate_border {
            return Err(Error::Config(format!(
                "only the 8-neighbor, radius-1, replicate-border operator is supported, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn max_code(&self) -> u32 {
        (1u32 << self.neighbors) - 1
    }
}

#[inline]
fn code_at<T: PartialOrd + Copy>(data: &[T], height: usize, width: usize, row: usize, col: usize) -> u8 {
    let center = data[row * width + col];
    let mut code = 0u8;
    for (bit, &(dr, dc)) in NEIGHBOR_OFFSETS.iter().enumerate() {
        let r = (row as isize + dr).clamp(0, height as isize - 1) as usize;
        let c = (col as isize + dc).clamp(0, width as isize - 1) as usize;
        if data[r * width + c] >= center {
            code |= 1 << bit;
        }
    }
    code
}

/// LBP code of the pixel at `(row, col)`. Panics if the pixel is outside the image.
pub fn lbp_code<T: PartialOrd + Copy>(image: &Image<T>, row: usize, col: usize) -> u8 {
    assert!(row < image.height && col < image.width, "pixel outside image");
    code_at(&image.data, image.height, image.width, row, col)
}

/// Codes for every pixel of a row-major band.
pub fn lbp_image<T: PartialOrd + Copy + Sync>(image: &Image<T>) -> Image<u8> {
    let (h, w) = (image.height, image.width);
    Image {
        height: h,
        width: w,
        data: (0..h * w)
            .map(|p| code_at(&image.data, h, w, p / w, p % w))
            .collect(),
    }
}

/// `pixels × bands` matrix of codes scaled by `1/255` into `[0, 1]`.
pub fn lbp_features(cube: &HyperCube, cfg: &LbpConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let (h, w, bands) = (cube.height(), cube.width(), cube.bands());
    let scale = f64::from(cfg.max_code());
    let planes = par::map_range(bands, |b| {
        let band = cube.band(b);
        (0..h * w)
            .map(|p| f64::from(code_at(band, h, w, p / w, p % w)) / scale)
            .collect::<Vec<f64>>()
    });
    let mut out = FeatureMatrix::zeros(h * w, bands);
    for (b, plane) in planes.iter().enumerate() {
        for (p, &v) in plane.iter().enumerate() {
            out.set(p, b, v);
        }
    }
    Ok(out)
}
