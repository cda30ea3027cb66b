//! Canonical on-disk format: a JSON sidecar header (`name.json`) next to a raw
//! little-endian payload (`name.bin`). NumPy `.npy` files are accepted on read.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HyperCube, LabelRaster};
use crate::error::{Error, Result};

pub const CUBE_ORDER: &str = "row-major-band-sequential";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub dtype: String,
    pub order: String,
    pub byteorder: String,
    /// Payload file name relative to the header. Defaults to the header's
    /// stem with a `.bin` extension; never written by [`save_cube`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl RasterHeader {
    fn canonical(height: usize, width: usize, bands: usize, dtype: &str) -> Self {
        Self {
            height,
            width,
            bands,
            dtype: dtype.into(),
            order: CUBE_ORDER.into(),
            byteorder: "little".into(),
            payload: None,
        }
    }

    fn element_size(&self) -> Result<usize> {
        match self.dtype.as_str() {
            "f32" => Ok(4),
            "u16" => Ok(2),
            other => Err(Error::Data(format!("unsupported dtype {other:?}"))),
        }
    }

    fn check(&self) -> Result<()> {
        if self.order != CUBE_ORDER {
            return Err(Error::Data(format!("unsupported order {:?}", self.order)));
        }
        if self.byteorder != "little" {
            return Err(Error::Data(format!("unsupported byteorder {:?}", self.byteorder)));
        }
        self.element_size().map(|_| ())
    }
}

fn payload_path(header_path: &Path, header: &RasterHeader) -> PathBuf {
    match &header.payload {
        Some(name) => header_path.with_file_name(name),
        None => header_path.with_extension("bin"),
    }
}

fn header_path_for(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        path.to_path_buf()
    } else {
        path.with_extension("json")
    }
}

fn read_header(path: &Path) -> Result<RasterHeader> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: RasterHeader =
        serde_json::from_str(&text).map_err(|source| Error::Header {
            path: path.to_path_buf(),
            source,
        })?;
    header.check()?;
    Ok(header)
}

fn read_payload(header_path: &Path, header: &RasterHeader) -> Result<Vec<u8>> {
    let path = payload_path(header_path, header);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let expected = (header.height * header.width * header.bands * header.element_size()?) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::PayloadLength {
            expected,
            actual: bytes.len() as u64,
        });
    }
    Ok(bytes)
}

fn is_npy(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "npy")
}

/// Loads a cube from a canonical header (`.json`, or any path whose `.json`
/// sibling is the header) or from an `.npy` array of shape `(H, W, B)`.
pub fn load_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    let path = path.as_ref();
    if is_npy(path) {
        return npy::load_cube(path);
    }
    let header_path = header_path_for(path);
    let header = read_header(&header_path)?;
    if header.dtype != "f32" {
        return Err(Error::Data(format!("cube dtype must be f32, found {:?}", header.dtype)));
    }
    let bytes = read_payload(&header_path, &header)?;
    read_cube_bytes(&header, &bytes)
}

/// Decodes a canonical f32 payload.
pub fn read_cube_bytes(header: &RasterHeader, bytes: &[u8]) -> Result<HyperCube> {
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    HyperCube::new(header.height, header.width, header.bands, values)
}

/// Writes `<stem>.json` and `<stem>.bin`. `path` may name either file.
pub fn save_cube(cube: &HyperCube, path: impl AsRef<Path>) -> Result<()> {
    let header = RasterHeader::canonical(cube.height(), cube.width(), cube.bands(), "f32");
    let mut payload = Vec::with_capacity(cube.values().len() * 4);
    for v in cube.values() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    write_pair(path.as_ref(), &header, &payload)
}

pub fn load_labels(path: impl AsRef<Path>, num_classes: u16) -> Result<LabelRaster> {
    let (h, w, labels) = load_label_values(path)?;
    LabelRaster::new(h, w, num_classes, labels)
}

/// Like [`load_labels`], taking the class count from the largest label.
pub fn load_labels_inferred(path: impl AsRef<Path>) -> Result<LabelRaster> {
    let (h, w, labels) = load_label_values(path)?;
    let num_classes = labels.iter().copied().max().unwrap_or(0);
    LabelRaster::new(h, w, num_classes, labels)
}

/// Raw `(height, width, labels)` of a label grid, without class checks.
pub fn load_label_values(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let path = path.as_ref();
    if is_npy(path) {
        return npy::read_labels(path);
    }
    let header_path = header_path_for(path);
    let header = read_header(&header_path)?;
    if header.dtype != "u16" || header.bands != 1 {
        return Err(Error::Data(format!(
            "label raster must be u16 with one band, found {:?} with {} bands",
            header.dtype, header.bands
        )));
    }
    let bytes = read_payload(&header_path, &header)?;
    let labels = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    Ok((header.height, header.width, labels))
}

pub fn save_labels(labels: &LabelRaster, path: impl AsRef<Path>) -> Result<()> {
    save_label_values(labels.height(), labels.width(), labels.labels(), path)
}

/// Writes an unvalidated label grid (prediction maps may omit classes).
pub fn save_label_values(
    height: usize,
    width: usize,
    labels: &[u16],
    path: impl AsRef<Path>,
) -> Result<()> {
    let header = RasterHeader::canonical(height, width, 1, "u16");
    let payload: Vec<u8> = labels.iter().flat_map(|l| l.to_le_bytes()).collect();
    write_pair(path.as_ref(), &header, &payload)
}

fn write_pair(path: &Path, header: &RasterHeader, payload: &[u8]) -> Result<()> {
    let header_path = header_path_for(path);
    if let Some(dir) = header_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(header).expect("header serializes");
    text.push('\n');
    fs::write(&header_path, text).map_err(|e| Error::io(&header_path, e))?;
    let bin = payload_path(&header_path, header);
    fs::write(&bin, payload).map_err(|e| Error::io(&bin, e))
}

mod npy {
    use std::path::Path;

    use npyz::{DType, NpyFile, TypeChar};

    use crate::datacube::HyperCube;
    use crate::error::{Error, Result};

    fn open(path: &Path) -> Result<NpyFile<std::io::BufReader<std::fs::File>>> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        NpyFile::new(std::io::BufReader::new(file))
            .map_err(|e| Error::Data(format!("{}: not a valid npy file: {e}", path.display())))
    }

    fn read_f64(path: &Path) -> Result<(Vec<u64>, Vec<f64>)> {
        let npy = open(path)?;
        if npy.order() == npyz::Order::Fortran {
            return Err(Error::Data("fortran-ordered npy arrays are not supported".into()));
        }
        let shape = npy.shape().to_vec();
        let bad = |e: std::io::Error| Error::Data(format!("{}: {e}", path.display()));
        let DType::Plain(ty) = npy.dtype() else {
            return Err(Error::Data("structured npy dtypes are not supported".into()));
        };
        let values: Vec<f64> = match (ty.type_char(), ty.size_field()) {
            (TypeChar::Float, 4) => npy.into_vec::<f32>().map_err(bad)?.into_iter().map(f64::from).collect(),
            (TypeChar::Float, 8) => npy.into_vec::<f64>().map_err(bad)?,
            (TypeChar::Uint, 1) => npy.into_vec::<u8>().map_err(bad)?.into_iter().map(f64::from).collect(),
            (TypeChar::Uint, 2) => npy.into_vec::<u16>().map_err(bad)?.into_iter().map(f64::from).collect(),
            (TypeChar::Uint, 4) => npy.into_vec::<u32>().map_err(bad)?.into_iter().map(f64::from).collect(),
            (TypeChar::Int, 2) => npy.into_vec::<i16>().map_err(bad)?.into_iter().map(f64::from).collect(),
            (TypeChar::Int, 4) => npy.into_vec::<i32>().map_err(bad)?.into_iter().map(f64::from).collect(),
            (TypeChar::Int, 8) => npy.into_vec::<i64>().map_err(bad)?.into_iter().map(|v| v as f64).collect(),
            _ => return Err(Error::Data(format!("unsupported npy dtype {ty}"))),
        };
        Ok((shape, values))
    }

    pub fn load_cube(path: &Path) -> Result<HyperCube> {
        let (shape, values) = read_f64(path)?;
        let [h, w, b] = shape[..] else {
            return Err(Error::dims("shape (H, W, B)", format!("{shape:?}")));
        };
        let (h, w, b) = (h as usize, w as usize, b as usize);
        // (H, W, B) interleaved -> band-sequential
        let mut out = vec![0f32; h * w * b];
        for p in 0..h * w {
            for k in 0..b {
                out[k * h * w + p] = values[p * b + k] as f32;
            }
        }
        HyperCube::new(h, w, b, out)
    }

    pub fn read_labels(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
        let (shape, values) = read_f64(path)?;
        let [h, w] = shape[..] else {
            return Err(Error::dims("shape (H, W)", format!("{shape:?}")));
        };
        let labels = values
            .iter()
            .map(|&v| {
                if v < 0.0 || v.fract() != 0.0 || v > f64::from(u16::MAX) {
                    Err(Error::Data(format!("label value {v} is not a class id")))
                } else {
                    Ok(v as u16)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((h as usize, w as usize, labels))
    }
}
