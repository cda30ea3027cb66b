//! Row-major feature matrices and single-band images.

use std::path::Path;

use crate::datacube::HyperCube;
use crate::error::{Error, Result};

/// Per-pixel (or per-sample) feature vectors, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                format!("{rows}x{cols} = {} values", rows * cols),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dims(format!("{cols} columns"), format!("{} columns", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// One row per pixel, one column per band.
    pub fn from_cube(cube: &HyperCube) -> Self {
        let (pixels, bands) = (cube.pixels(), cube.bands());
        let mut data = vec![0.0; pixels * bands];
        for b in 0..bands {
            for (p, &v) in cube.band(b).iter().enumerate() {
                data[p * bands + b] = f64::from(v);
            }
        }
        Self {
            rows: pixels,
            cols: bands,
            data,
        }
    }

    /// Checkpoint view: a `height × width` cube with one band per column,
    /// stored at 32-bit precision.
    pub fn to_cube(&self, height: usize, width: usize) -> Result<HyperCube> {
        if height * width != self.rows {
            return Err(Error::dims(
                format!("{} rows", height * width),
                format!("{} rows", self.rows),
            ));
        }
        let mut values = vec![0f32; self.rows * self.cols];
        for p in 0..self.rows {
            for (b, &v) in self.row(p).iter().enumerate() {
                values[b * self.rows + p] = v as f32;
            }
        }
        HyperCube::new(height, width, self.cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.data[i * self.cols + j])
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A single-band raster in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T = f64> {
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Image<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::dims(
                format!("{height}x{width} image, non-empty"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Image<U> {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl FeatureMatrix {
    /// Writes an `.npy` array of shape `(rows, cols)` with `<f8` values.
    pub fn save_npy(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let file = std::fs::File::create(path).map_err(io)?;
        use npyz::WriterBuilder;
        let mut w = npyz::WriteOptions::new()
            .default_dtype()
            .shape(&[self.rows as u64, self.cols as u64])
            .writer(std::io::BufWriter::new(file))
            .begin_nd()
            .map_err(io)?;
        w.extend(self.data.iter().copied()).map_err(io)?;
        w.finish().map_err(io)
    }

    pub fn load_npy(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let bad = |e: std::io::Error| Error::Data(format!("{}: {e}", path.display()));
        let npy = npyz::NpyFile::new(std::io::BufReader::new(file)).map_err(bad)?;
        let [rows, cols] = npy.shape()[..] else {
            return Err(Error::dims("shape (rows, cols)", format!("{:?}", npy.shape())));
        };
        if npy.order() == npyz::Order::Fortran {
            return Err(Error::Data("fortran-ordered npy arrays are not supported".into()));
        }
        let data = npy.into_vec::<f64>().map_err(bad)?;
        Self::new(rows as usize, cols as usize, data)
    }
}
