//! Dataset loading, preprocessing to 48 × 48 RGB, stratified splitting and
//! a binary feature cache.

mod folder;
mod idx;
mod preprocess;
mod split;
mod store;

use serde::{Deserialize, Serialize};

pub use folder::{load_image_folder, load_image_folder_with};
pub use idx::{find_idx_pair, load_idx, read_idx};
pub use preprocess::{preprocess, resize_bilinear, PixelSource};
pub use split::{apportion, split, split_labels, subsample, DatasetSplit, TRAIN_FRACTION};
pub use store::{load_store, read_store, save_store, write_store, FeatureStore, Preprocessing, Provenance};

use crate::error::{Error, Result};
use crate::ridge::LabelSet;

/// Decoded 8-bit image, interleaved `height × width × channels`.
///
/// One channel is grayscale, two is grayscale plus alpha, three is RGB and
/// four is RGBA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl RawImage {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if !(1..=4).contains(&channels) {
            return Err(Error::invalid(format!("unsupported channel count {channels}")));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "pixel buffer holds {} bytes, expected {height}×{width}×{channels}",
                pixels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    IdxPair,
    ImageFolder,
}

/// Labelled images. Every class has at least one sample and there are at
/// least two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    images: Vec<RawImage>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    source: DatasetSource,
}

impl RawDataset {
    pub fn new(images: Vec<RawImage>, labels: Vec<usize>, class_names: Vec<String>, source: DatasetSource) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::invalid(format!("{} images but {} labels", images.len(), labels.len())));
        }
        let k = class_names.len();
        if k < 2 {
            return Err(Error::validation(format!("dataset needs at least 2 classes, found {k}")));
        }
        LabelSet::new(class_names.clone())?;
        let mut counts = vec![0usize; k];
        for &l in &labels {
            if l >= k {
                return Err(Error::validation(format!("label {l} out of range for {k} classes")));
            }
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::validation(format!("class {:?} has no samples", class_names[c])));
        }
        Ok(Self {
            images,
            labels,
            class_names,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[RawImage] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn source(&self) -> DatasetSource {
        self.source
    }

    pub fn label_set(&self) -> LabelSet {
        LabelSet::new(self.class_names.clone()).expect("names validated on construction")
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Keeps the listed samples in the given order. Fails if a class ends up
    /// empty.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut images = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!("sample index {i} out of range for {}", self.len())));
            }
            images.push(self.images[i].clone());
            labels.push(self.labels[i]);
        }
        Self::new(images, labels, self.class_names.clone(), self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(v: u8) -> RawImage {
        RawImage::new(1, 1, 1, vec![v]).unwrap()
    }

    #[test]
    fn rejects_empty_class_and_bad_labels() {
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        assert!(RawDataset::new(vec![px(0), px(1)], vec![0, 1], names.clone(), DatasetSource::IdxPair).is_err());
        assert!(RawDataset::new(vec![px(0), px(1)], vec![0, 3], names[..2].to_vec(), DatasetSource::IdxPair).is_err());
        assert!(RawDataset::new(vec![px(0)], vec![0], names[..1].to_vec(), DatasetSource::IdxPair).is_err());
        let ds = RawDataset::new(vec![px(0), px(1), px(2)], vec![0, 1, 2], names, DatasetSource::IdxPair).unwrap();
        assert_eq!(ds.class_counts(), vec![1, 1, 1]);
        assert!(ds.subset(&[0, 1]).is_err());
        assert_eq!(ds.subset(&[2, 1, 0]).unwrap().labels(), &[2, 1, 0]);
    }

    #[test]
    fn raw_image_checks_buffer() {
        assert!(RawImage::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(RawImage::new(1, 1, 5, vec![0; 5]).is_err());
    }
}
