//! `FSTR` feature cache.
//!
//! Little-endian layout: magic `b"FSTR"`, u32 version, u64 header length,
//! UTF-8 JSON header `{rows, cols, provenance}`, `rows·cols` f32 values
//! row-major, then `rows` u16 labels.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::scattering::INPUT_SIDE;

pub const MAGIC: &[u8; 4] = b"FSTR";
pub const VERSION: u32 = 1;
const PREAMBLE_LEN: u64 = 4 + 4 + 8;
const MAX_HEADER_LEN: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub side: usize,
    pub resize: String,
    pub gray: String,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self {
            side: INPUT_SIDE,
            resize: "bilinear_stretch".into(),
            gray: "replicate".into(),
        }
    }
}

/// Everything needed to rebuild a feature matrix from its dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: String,
    /// Loader description, in the form the experiment config uses.
    pub dataset: serde_json::Value,
    pub split_seed: u64,
    pub medium_seed: Option<u64>,
    /// `"train"` or `"test"`.
    pub part: String,
    pub preprocessing: Preprocessing,
    pub quantize_bits: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    features: FeatureMatrix<f32>,
    labels: Vec<u16>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Header {
    rows: usize,
    cols: usize,
    provenance: Provenance,
}

impl FeatureStore {
    pub fn new(features: FeatureMatrix<f32>, labels: &[usize], provenance: Provenance) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::invalid(format!("{} labels for {} rows", labels.len(), features.rows())));
        }
        let labels = labels
            .iter()
            .map(|&l| u16::try_from(l).map_err(|_| Error::invalid(format!("label {l} does not fit in u16"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            features,
            labels,
            provenance,
        })
    }

    pub fn features(&self) -> &FeatureMatrix<f32> {
        &self.features
    }

    pub fn labels(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn into_parts(self) -> (FeatureMatrix<f32>, Vec<usize>, Provenance) {
        let labels = self.labels();
        (self.features, labels, self.provenance)
    }
}

pub fn write_store<W: Write>(store: &FeatureStore, mut w: W) -> Result<()> {
    let header = serde_json::to_vec(&Header {
        rows: store.features.rows(),
        cols: store.features.cols(),
        provenance: store.provenance.clone(),
    })?;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u64::<LittleEndian>(header.len() as u64)?;
    w.write_all(&header)?;
    for &v in store.features.as_slice() {
        w.write_f32::<LittleEndian>(v)?;
    }
    for &l in &store.labels {
        w.write_u16::<LittleEndian>(l)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_store<R: Read>(mut r: R) -> Result<FeatureStore> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| eof(e, 0))?;
    if &magic != MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:?}, expected \"FSTR\"")));
    }
    let version = r.read_u32::<LittleEndian>().map_err(|e| eof(e, 4))?;
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let len = r.read_u64::<LittleEndian>().map_err(|e| eof(e, 8))?;
    if len > MAX_HEADER_LEN {
        return Err(Error::format(8, format!("header length {len} is implausible")));
    }
    let mut raw = vec![0u8; len as usize];
    r.read_exact(&mut raw).map_err(|e| eof(e, PREAMBLE_LEN))?;
    let header: Header =
        serde_json::from_slice(&raw).map_err(|e| Error::format(PREAMBLE_LEN, format!("bad JSON header: {e}")))?;

    let payload = PREAMBLE_LEN + len;
    let count = header
        .rows
        .checked_mul(header.cols)
        .ok_or_else(|| Error::format(PREAMBLE_LEN, "dimensions overflow"))?;
    let mut values = vec![0f32; count];
    let mut bytes = vec![0u8; 4 * count.min(1 << 20)];
    let mut done = 0;
    while done < count {
        let take = (count - done).min(bytes.len() / 4);
        let buf = &mut bytes[..4 * take];
        r.read_exact(buf).map_err(|e| eof(e, payload + 4 * done as u64))?;
        for (v, b) in values[done..done + take].iter_mut().zip(buf.chunks_exact(4)) {
            *v = f32::from_le_bytes(b.try_into().expect("4 bytes"));
        }
        done += take;
    }
    let labels_at = payload + 4 * count as u64;
    let mut labels = vec![0u16; header.rows];
    r.read_u16_into::<LittleEndian>(&mut labels).map_err(|e| eof(e, labels_at))?;
    Ok(FeatureStore {
        features: FeatureMatrix::new(header.rows, header.cols, values)?,
        labels,
        provenance: header.provenance,
    })
}

pub fn save_store(store: &FeatureStore, path: impl AsRef<Path>) -> Result<()> {
    write_store(store, BufWriter::new(File::create(path)?))
}

pub fn load_store(path: impl AsRef<Path>) -> Result<FeatureStore> {
    read_store(BufReader::new(File::open(path)?))
}

fn eof(e: std::io::Error, offset: u64) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::format(offset, "truncated feature store")
    } else {
        e.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provenance() -> Provenance {
        Provenance {
            scheme: "rc_raw".into(),
            dataset: serde_json::json!({"format": "idx", "path": "x"}),
            split_seed: 4,
            medium_seed: None,
            part: "train".into(),
            preprocessing: Preprocessing::default(),
            quantize_bits: Some(8),
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let x = FeatureMatrix::new(2, 3, vec![0.0, -0.0, f32::MIN_POSITIVE, 1e30, 3.5, f32::EPSILON]).unwrap();
        let store = FeatureStore::new(x, &[1, 0], provenance()).unwrap();
        let mut buf = Vec::new();
        write_store(&store, &mut buf).unwrap();
        let back = read_store(buf.as_slice()).unwrap();
        assert_eq!(back, store);
        let bits = |s: &FeatureStore| s.features().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&store));
    }

    #[test]
    fn truncated_labels_name_offset() {
        let store = FeatureStore::new(FeatureMatrix::new(2, 1, vec![1.0, 2.0]).unwrap(), &[0, 1], provenance()).unwrap();
        let mut buf = Vec::new();
        write_store(&store, &mut buf).unwrap();
        let header_len = u64::from_le_bytes(buf[8..16].try_into().unwrap());
        buf.truncate(buf.len() - 1);
        match read_store(buf.as_slice()) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, PREAMBLE_LEN + header_len + 8),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
