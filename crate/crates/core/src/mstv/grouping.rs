use std::ops::Range;

use crate::datacube::HyperCube;
use crate::error::{Error, Result};

/// Contiguous partition of `M` bands into `K` groups: the first `K−1` groups
/// hold `⌊M/K⌋` bands each and the last group takes the remainder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandGrouping {
    groups: Vec<Range<usize>>,
}

impl BandGrouping {
    pub fn new(bands: usize, k: usize) -> Result<Self> {
        if k < 1 || k > bands {
            return Err(Error::Config(format!(
                "group count {k} must lie in 1..={bands}"
            )));
        }
        let size = bands / k;
        let groups = (0..k)
            .map(|g| {
                let end = if g + 1 == k { bands } else { (g + 1) * size };
                g * size..end
            })
            .collect();
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Reduces `cube` to `k` bands, each the per-pixel mean of its group.
pub fn group_and_average(cube: &HyperCube, k: usize) -> Result<HyperCube> {
    let grouping = BandGrouping::new(cube.bands(), k)?;
    let n = cube.pixels();
    let bands = grouping
        .groups()
        .iter()
        .map(|g| {
            let mut acc = vec![0f64; n];
            for b in g.clone() {
                for (a, &v) in acc.iter_mut().zip(cube.band(b)) {
                    *a += f64::from(v);
                }
            }
            let len = g.len() as f64;
            acc.into_iter().map(|s| (s / len) as f32).collect()
        })
        .collect();
    HyperCube::from_bands(cube.height(), cube.width(), bands)
}
