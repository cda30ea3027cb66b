//! Hyperspectral cubes, ground-truth label rasters, and train/test splits.
//!
//! Cubes are stored band-sequential: all of band 0 in row-major order, then
//! band 1, and so on. Values are 32-bit at rest; every computation downstream
//! widens to `f64`.

mod io;
mod split;

pub use io::{
    load_cube, load_label_values, load_labels, load_labels_inferred, read_cube_bytes, save_cube,
    save_label_values, save_labels, RasterHeader,
};
pub use split::{class_train_count, stratified_split, stratified_split_labels, SampleSplit};

use crate::error::{Error, Result};
use crate::features::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    height: usize,
    width: usize,
    bands: usize,
    values: Vec<f32>,
}

impl HyperCube {
    /// `values` must be band-sequential and finite.
    pub fn new(height: usize, width: usize, bands: usize, values: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::Data(format!(
                "cube dimensions must be positive, got {height}x{width}x{bands}"
            )));
        }
        if values.len() != height * width * bands {
            return Err(Error::dims(
                format!("{} values", height * width * bands),
                format!("{} values", values.len()),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            height,
            width,
            bands,
            values,
        })
    }

    /// Builds a cube from per-band row-major planes.
    pub fn from_bands(height: usize, width: usize, bands: Vec<Vec<f32>>) -> Result<Self> {
        let n = bands.len();
        let mut values = Vec::with_capacity(height * width * n);
        for (b, plane) in bands.into_iter().enumerate() {
            if plane.len() != height * width {
                return Err(Error::dims(
                    format!("band {b} with {} values", height * width),
                    plane.len(),
                ));
            }
            values.extend(plane);
        }
        Self::new(height, width, n, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn band(&self, b: usize) -> &[f32] {
        let n = self.pixels();
        &self.values[b * n..(b + 1) * n]
    }

    pub fn band_image(&self, b: usize) -> Image<f64> {
        Image {
            height: self.height,
            width: self.width,
            data: self.band(b).iter().map(|&v| f64::from(v)).collect(),
        }
    }

    pub fn get(&self, row: usize, col: usize, band: usize) -> f32 {
        self.values[band * self.pixels() + row * self.width + col]
    }

    pub fn spectrum(&self, pixel: usize) -> Vec<f32> {
        (0..self.bands)
            .map(|b| self.values[b * self.pixels() + pixel])
            .collect()
    }
}

/// Per-pixel class labels; `0` marks an unlabeled pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRaster {
    height: usize,
    width: usize,
    num_classes: u16,
    labels: Vec<u16>,
}

impl LabelRaster {
    pub fn new(height: usize, width: usize, num_classes: u16, labels: Vec<u16>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Data(format!(
                "label raster dimensions must be positive, got {height}x{width}"
            )));
        }
        if labels.len() != height * width {
            return Err(Error::dims(format!("{} labels", height * width), labels.len()));
        }
        if num_classes == 0 {
            return Err(Error::Config("class count must be at least 1".into()));
        }
        let mut seen = vec![false; usize::from(num_classes) + 1];
        for &l in &labels {
            if l > num_classes {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    num_classes,
                });
            }
            seen[usize::from(l)] = true;
        }
        if let Some(class) = (1..=num_classes).find(|&c| !seen[usize::from(c)]) {
            return Err(Error::ClassAbsent { class, num_classes });
        }
        Ok(Self {
            height,
            width,
            num_classes,
            labels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; usize::from(self.num_classes)];
        for &l in self.labels.iter().filter(|&&l| l != 0) {
            counts[usize::from(l) - 1] += 1;
        }
        counts
    }

    /// Checks that this raster covers the same grid as `cube`.
    pub fn check_matches(&self, cube: &HyperCube) -> Result<()> {
        if (self.height, self.width) != (cube.height(), cube.width()) {
            return Err(Error::dims(
                format!("labels {}x{} (cube grid)", cube.height(), cube.width()),
                format!("{}x{}", self.height, self.width),
            ));
        }
        Ok(())
    }
}
