//! Big-endian IDX containers as distributed with MNIST.

use std::fs;
use std::path::{Path, PathBuf};

use super::{DatasetSource, RawDataset, RawImage};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Loads an image/label IDX pair. Class names are the decimal label values
/// `0..=max`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<RawDataset> {
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;
    read_idx(&images, &labels)
}

/// Parses in-memory IDX bytes. Errors carry the byte offset within the file
/// they refer to.
pub fn read_idx(images: &[u8], labels: &[u8]) -> Result<RawDataset> {
    let magic = be_u32(images, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(0, format!("image file magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let count = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::format(8, format!("zero image dimension {rows}×{cols}")));
    }
    let magic = be_u32(labels, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(0, format!("label file magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let label_count = be_u32(labels, 4)? as usize;
    if label_count != count {
        return Err(Error::format(4, format!("label file holds {label_count} items, image file {count}")));
    }

    let size = rows * cols;
    let needed = 16 + count * size;
    if images.len() < needed {
        let offset = 16 + (images.len() - 16) / size * size;
        return Err(Error::format(offset as u64, format!("image file truncated: {} of {needed} bytes", images.len())));
    }
    if labels.len() < 8 + count {
        return Err(Error::format(labels.len() as u64, format!("label file truncated: {} of {} bytes", labels.len(), 8 + count)));
    }

    let label_values: Vec<usize> = labels[8..8 + count].iter().map(|&b| b as usize).collect();
    let classes = label_values.iter().copied().max().map_or(0, |m| m + 1);
    let samples = images[16..needed]
        .chunks_exact(size)
        .map(|p| RawImage::new(rows, cols, 1, p.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    RawDataset::new(samples, label_values, (0..classes).map(|c| c.to_string()).collect(), DatasetSource::IdxPair)
}

/// Finds the image and label files in a directory. A `train-` pair is
/// preferred when several are present.
pub fn find_idx_pair(dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    names.sort();
    let pick = |tag: &str| -> Option<String> {
        let mut hits: Vec<&String> = names.iter().filter(|n| n.contains(tag)).collect();
        hits.sort_by_key(|n| !n.starts_with("train"));
        hits.first().map(|n| n.to_string())
    };
    match (pick("images-idx3"), pick("labels-idx1")) {
        (Some(i), Some(l)) => Ok((dir.join(i), dir.join(l))),
        _ => Err(Error::validation(format!("no IDX image/label pair in {}", dir.display()))),
    }
}

fn be_u32(buf: &[u8], offset: usize) -> Result<u32> {
    buf.get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::format(offset as u64, "file truncated inside header"))
}
