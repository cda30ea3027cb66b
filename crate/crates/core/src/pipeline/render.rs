//! Classification maps as binary PPM images.

use std::path::Path;

use crate::error::{Error, Result};

const PALETTE: [[u8; 3]; 16] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
];

/// Color of a class id; `0` (unlabeled) is black. Ids past the fixed palette
/// get a deterministic hashed color.
pub fn class_color(label: u16) -> [u8; 3] {
    match label {
        0 => [0, 0, 0],
        l if usize::from(l) <= PALETTE.len() => PALETTE[usize::from(l) - 1],
        l => {
            let h = u32::from(l).wrapping_mul(2_654_435_761);
            [(h >> 24) as u8 | 0x20, (h >> 16) as u8 | 0x20, (h >> 8) as u8 | 0x20]
        }
    }
}

/// P6 image bytes for a row-major label grid.
pub fn render_map(labels: &[u16], height: usize, width: usize) -> Result<Vec<u8>> {
    if labels.len() != height * width {
        return Err(Error::dims(format!("{} labels", height * width), labels.len()));
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(labels.len() * 3);
    for &l in labels {
        out.extend_from_slice(&class_color(l));
    }
    Ok(out)
}

pub fn save_map(labels: &[u16], height: usize, width: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = render_map(labels, height, width)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
