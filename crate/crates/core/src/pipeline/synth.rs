//! Synthetic striped test scenes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::datacube::{HyperCube, LabelRaster};
use crate::error::{Error, Result};

/// Relative amplitude of the per-class checkerboard texture.
const TEXTURE_AMPLITUDE: f64 = 0.1;

/// Class of row `r`: classes occupy consecutive horizontal stripes.
fn stripe_class(row: usize, height: usize, classes: usize) -> u16 {
    (row * classes / height + 1) as u16
}

/// Smooth spectral signature of class `k` (0-based) at band `b`.
pub fn class_signature(k: usize, b: usize, bands: usize) -> f64 {
    let t = if bands > 1 { b as f64 / (bands - 1) as f64 } else { 0.0 };
    0.5 + 0.25 * (std::f64::consts::PI * (k + 1) as f64 * t + k as f64).sin()
}

/// Builds an `height × width × bands` scene of `classes` horizontal stripes.
/// Each stripe carries its class signature, modulated by a checkerboard whose
/// cell size depends on the class, plus i.i.d. Gaussian noise of standard
/// deviation `noise`. Every pixel is labeled.
pub fn make_synthetic_cube(
    height: usize,
    width: usize,
    bands: usize,
    classes: u16,
    noise: f64,
    seed: u64,
) -> Result<(HyperCube, LabelRaster)> {
    let c = usize::from(classes);
    if height == 0 || width == 0 || bands == 0 {
        return Err(Error::Data(format!("invalid scene size {height}x{width}x{bands}")));
    }
    if c == 0 || c > height {
        return Err(Error::Config(format!(
            "{classes} classes cannot form stripes in {height} rows"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config(format!("noise sigma {noise} must be finite and non-negative")));
    }
    let normal = Normal::new(0.0, noise).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<u16> = (0..height * width)
        .map(|p| stripe_class(p / width, height, c))
        .collect();
    let mut values = Vec::with_capacity(height * width * bands);
    for b in 0..bands {
        for (p, &l) in labels.iter().enumerate() {
            let k = usize::from(l) - 1;
            let cell = 2 + k % 3;
            let (r, col) = (p / width, p % width);
            let sign = if (r / cell + col / cell) % 2 == 0 { 1.0 } else { -1.0 };
            let v = class_signature(k, b, bands) * (1.0 + TEXTURE_AMPLITUDE * sign) + normal.sample(&mut rng);
            values.push(v as f32);
        }
    }
    Ok((
        HyperCube::new(height, width, bands, values)?,
        LabelRaster::new(height, width, classes, labels)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stripes_cover_every_class() {
        let (cube, labels) = make_synthetic_cube(10, 4, 6, 5, 0.1, 1).unwrap();
        assert_eq!((cube.height(), cube.width(), cube.bands()), (10, 4, 6));
        assert_eq!(labels.class_counts(), vec![8; 5]);
        assert_eq!(labels.labels()[0], 1);
        assert_eq!(labels.labels()[39], 5);
    }

    #[test]
    fn seeded_and_reproducible() {
        let a = make_synthetic_cube(8, 8, 4, 2, 0.1, 9).unwrap();
        let b = make_synthetic_cube(8, 8, 4, 2, 0.1, 9).unwrap();
        let c = make_synthetic_cube(8, 8, 4, 2, 0.1, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn invalid_sizes() {
        assert!(make_synthetic_cube(3, 4, 4, 4, 0.1, 0).is_err());
        assert!(make_synthetic_cube(0, 4, 4, 1, 0.1, 0).is_err());
        assert!(make_synthetic_cube(4, 4, 4, 2, -1.0, 0).is_err());
    }
}
