//! Model file: an 8-byte little-endian header length, a JSON header, then the
//! training features (`n × d`) and coefficients (`n × c`) as row-major
//! little-endian `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{KelmHyperparams, KelmModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

const FORMAT: &str = "mlskelm-model";

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ModelHeader {
    format: String,
    version: u32,
    hyperparams: KelmHyperparams,
    samples: usize,
    features: usize,
    class_ids: Vec<u16>,
    dtype: String,
    byteorder: String,
}

pub fn write_model(model: &KelmModel, mut w: impl Write) -> std::io::Result<()> {
    let header = ModelHeader {
        format: FORMAT.into(),
        version: 1,
        hyperparams: model.hyper(),
        samples: model.train_x().rows(),
        features: model.feature_dim(),
        class_ids: model.class_ids().to_vec(),
        dtype: "f64".into(),
        byteorder: "little".into(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in model.train_x().as_slice().iter().chain(model.alpha().as_slice()) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_model(mut r: impl Read) -> Result<KelmModel> {
    let bad = |msg: String| Error::Data(format!("model file: {msg}"));
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|e| bad(e.to_string()))?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 30 {
        return Err(bad(format!("implausible header length {len}")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|e| bad(e.to_string()))?;
    let header: ModelHeader =
        serde_json::from_slice(&json).map_err(|e| bad(format!("bad header: {e}")))?;
    if header.format != FORMAT || header.version != 1 || header.dtype != "f64" || header.byteorder != "little" {
        return Err(bad(format!(
            "unsupported format {:?} v{} ({}, {})",
            header.format, header.version, header.dtype, header.byteorder
        )));
    }
    let (n, d, c) = (header.samples, header.features, header.class_ids.len());
    let mut read_block = |count: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; count * 8];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::PayloadLength {
                expected: (count * 8) as u64,
                actual: 0,
            })?;
        Ok(bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect())
    };
    let train_x = FeatureMatrix::new(n, d, read_block(n * d)?)?;
    let alpha = FeatureMatrix::new(n, c, read_block(n * c)?)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(|e| bad(e.to_string()))?;
    if !rest.is_empty() {
        return Err(bad(format!("{} trailing bytes", rest.len())));
    }
    KelmModel::from_parts(train_x, alpha, header.hyperparams, header.class_ids)
}

pub fn save_model(model: &KelmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_model(model, &mut buf).expect("writing to memory");
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<KelmModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes[..])
}
