//! Multiscale spectral features: band grouping and averaging, relative total
//! variation smoothing at several scales, and landmark kernel PCA fusion.

mod grouping;
mod kpca;
mod rtv;

pub use grouping::{group_and_average, BandGrouping};
pub use kpca::{KpcaKernel, KpcaModel};
pub use rtv::{rtv_smooth, RtvParams};

use serde::{Deserialize, Serialize};

use crate::datacube::HyperCube;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct MstvConfig {
    /// Number of band groups after averaging.
    pub k: usize,
    pub scales: Vec<RtvParams>,
    pub n_components: usize,
    /// RBF width for KPCA; `0` selects a linear kernel. Defaults to `1/(K·L)`.
    pub kpca_gamma: Option<f64>,
    /// Defaults to `min(1000, pixels)`.
    pub landmark_count: Option<usize>,
    pub seed: u64,
}

impl Default for MstvConfig {
    fn default() -> Self {
        Self {
            k: 20,
            scales: [1.0, 2.0, 3.0]
                .iter()
                .map(|&sigma| RtvParams::new(0.005, sigma))
                .collect(),
            n_components: 20,
            kpca_gamma: None,
            landmark_count: None,
            seed: 0,
        }
    }
}

impl MstvConfig {
    pub fn kernel(&self) -> KpcaKernel {
        let gamma = self
            .kpca_gamma
            .unwrap_or(1.0 / (self.k * self.scales.len()).max(1) as f64);
        KpcaKernel::from_gamma(gamma)
    }

    pub fn landmarks_for(&self, pixels: usize) -> usize {
        self.landmark_count.unwrap_or(pixels.min(1000))
    }

    pub fn validate(&self, bands: usize) -> Result<()> {
        if self.k < 1 || self.k > bands {
            return Err(Error::Config(format!("K = {} must lie in 1..={bands}", self.k)));
        }
        if self.scales.is_empty() {
            return Err(Error::Config("at least one RTV scale is required".into()));
        }
        self.scales.iter().try_for_each(RtvParams::validate)?;
        let stacked = self.k * self.scales.len();
        if self.n_components < 1 || self.n_components > stacked {
            return Err(Error::Config(format!(
                "component count {} must lie in 1..={stacked}",
                self.n_components
            )));
        }
        if let Some(m) = self.landmark_count {
            if m < self.n_components {
                return Err(Error::Config(format!(
                    "landmark count {m} is below the component count {}",
                    self.n_components
                )));
            }
        }
        Ok(())
    }
}

/// Smooths every band at every scale. Band `l·K + k` of the output is band `k`
/// smoothed with `scales[l]`.
pub fn multiscale_stack(reduced: &HyperCube, scales: &[RtvParams]) -> Result<HyperCube> {
    if scales.is_empty() {
        return Err(Error::Config("at least one RTV scale is required".into()));
    }
    let k = reduced.bands();
    let planes = par::try_map_range(k * scales.len(), |job| {
        let (l, b) = (job / k, job % k);
        let out = rtv_smooth(&reduced.band_image(b), &scales[l])?;
        Ok::<_, Error>(out.data.into_iter().map(|v| v as f32).collect::<Vec<f32>>())
    })?;
    HyperCube::from_bands(reduced.height(), reduced.width(), planes)
}

/// Landmark KPCA over the pixels of `stacked`, returning `pixels × N` scores.
pub fn kpca_reduce(stacked: &HyperCube, cfg: &MstvConfig) -> Result<FeatureMatrix> {
    let data = FeatureMatrix::from_cube(stacked);
    let model = KpcaModel::fit(
        &data,
        cfg.kernel(),
        cfg.n_components,
        cfg.landmarks_for(data.rows()),
        cfg.seed,
    )?;
    model.transform(&data)
}

/// Per-band min-max scaling to `[0, 1]`; constant bands map to 0.
pub fn normalize_bands(cube: &HyperCube) -> HyperCube {
    let planes = (0..cube.bands())
        .map(|b| {
            let band = cube.band(b);
            let (lo, hi) = band
                .iter()
                .fold((f32::INFINITY, f32::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            let range = f64::from(hi) - f64::from(lo);
            band.iter()
                .map(|&v| {
                    if range > 0.0 {
                        ((f64::from(v) - f64::from(lo)) / range) as f32
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    HyperCube::from_bands(cube.height(), cube.width(), planes).expect("same grid")
}

/// Spectral features for every pixel: group and average, smooth at every
/// scale, rescale the stacked bands to `[0, 1]`, and fuse with KPCA.
pub fn extract(cube: &HyperCube, cfg: &MstvConfig) -> Result<FeatureMatrix> {
    cfg.validate(cube.bands())?;
    let reduced = group_and_average(cube, cfg.k)?;
    let stacked = multiscale_stack(&reduced, &cfg.scales)?;
    kpca_reduce(&normalize_bands(&stacked), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_cube(bands: usize) -> HyperCube {
        let values = (0..16 * bands).map(|i| ((i * 7) % 11) as f32).collect();
        HyperCube::new(4, 4, bands, values).unwrap()
    }

    #[test]
    fn zero_lambda_stack_is_identity() {
        let cube = ramp_cube(3);
        let out = multiscale_stack(&cube, &[RtvParams::new(0.0, 1.0)]).unwrap();
        assert_eq!(out, cube);
    }

    #[test]
    fn stack_is_scale_major() {
        let cube = ramp_cube(2);
        let scales = [RtvParams::new(0.0, 1.0), RtvParams::new(0.02, 2.0)];
        let out = multiscale_stack(&cube, &scales).unwrap();
        assert_eq!(out.bands(), 4);
        assert_eq!(out.band(0), cube.band(0));
        assert_eq!(out.band(1), cube.band(1));
        let smoothed = rtv_smooth(&cube.band_image(1), &scales[1]).unwrap();
        let expect: Vec<f32> = smoothed.data.iter().map(|&v| v as f32).collect();
        assert_eq!(out.band(3), &expect[..]);
    }

    #[test]
    fn twenty_bands_three_scales() {
        let cfg = MstvConfig::default();
        assert_eq!(cfg.k * cfg.scales.len(), 60);
        assert!((match cfg.kernel() {
            KpcaKernel::Rbf { gamma } => gamma,
            KpcaKernel::Linear => 0.0,
        } - 1.0 / 60.0)
            .abs()
            < 1e-15);
    }

    #[test]
    fn config_rejects_too_many_components() {
        let cfg = MstvConfig {
            k: 2,
            n_components: 7,
            ..MstvConfig::default()
        };
        assert!(cfg.validate(10).is_err());
    }

    #[test]
    fn extract_shapes() {
        let values = (0..8 * 8 * 6).map(|i| ((i * 13) % 17) as f32).collect();
        let cube = HyperCube::new(8, 8, 6, values).unwrap();
        let cfg = MstvConfig {
            k: 3,
            n_components: 4,
            ..MstvConfig::default()
        };
        let f = extract(&cube, &cfg).unwrap();
        assert_eq!((f.rows(), f.cols()), (64, 4));
        assert!(f.is_finite());
    }
}
