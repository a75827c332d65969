use std::borrow::Cow;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{DatasetFormat, DatasetSpec, Scheme};
use crate::dataset::{
    find_idx_pair, load_idx, load_image_folder_with, load_store, preprocess, save_store, split, subsample, DatasetSplit,
    FeatureStore, Preprocessing, Provenance, RawDataset,
};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::scattering::{quantize, Encoding, Medium, TmStorage, INPUT_PIXELS, SPECKLE_PIXELS};

/// Images preprocessed and scattered together; bounds the transient
/// `f64` image memory.
const CHUNK: usize = 128;

pub fn load_dataset(spec: &DatasetSpec) -> Result<RawDataset> {
    if !spec.path.exists() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("dataset {} does not exist", spec.path.display()),
        )
        .into());
    }
    match spec.format {
        DatasetFormat::Idx => {
            let (images, labels) = match &spec.labels {
                Some(l) => (spec.path.clone(), l.clone()),
                None if spec.path.is_dir() => find_idx_pair(&spec.path)?,
                None => {
                    return Err(Error::invalid(format!(
                        "{} is a file; the IDX label file must be given too",
                        spec.path.display()
                    )))
                }
            };
            load_idx(images, labels)
        }
        DatasetFormat::Folder => load_image_folder_with(&spec.path, spec.strict),
    }
}

/// The samples and split one repetition works on. With `max_samples` set, a
/// stratified subsample is drawn first, keyed on the same seed.
pub fn repetition_data<'a>(dataset: &'a RawDataset, spec: &DatasetSpec, split_seed: u64) -> Result<(Cow<'a, RawDataset>, DatasetSplit)> {
    let data = match spec.max_samples {
        Some(n) if n < dataset.len() => {
            let keep = subsample(dataset.labels(), dataset.classes(), n, split_seed)?;
            Cow::Owned(dataset.subset(&keep)?)
        }
        _ => Cow::Borrowed(dataset),
    };
    let s = split(&data, split_seed)?;
    Ok((data, s))
}

pub fn medium_for(scheme: Scheme, seed: u64, storage: TmStorage) -> Result<Option<Medium>> {
    if !scheme.scatters() {
        return Ok(None);
    }
    Medium::generate(seed, scheme.channels(), INPUT_PIXELS, SPECKLE_PIXELS, storage).map(Some)
}

/// Feature rows for `indices`, in order.
///
/// Raw pixels are flattened channel-planar. Scattering schemes concatenate
/// the speckle planes in the medium's channel order, each optionally
/// re-quantized to `quantize_bits`.
pub fn build_features(
    dataset: &RawDataset,
    indices: &[usize],
    scheme: Scheme,
    medium: Option<&Medium>,
    quantize_bits: Option<u32>,
) -> Result<FeatureMatrix<f32>> {
    if scheme.scatters() != medium.is_some() {
        return Err(Error::invalid(format!("scheme {scheme} and the supplied medium disagree")));
    }
    let dim = scheme.feature_dim();
    let mut out = FeatureMatrix::<f32>::zeros(indices.len(), dim);
    for (c, chunk) in indices.chunks(CHUNK).enumerate() {
        let images = chunk
            .par_iter()
            .map(|&i| {
                let img = dataset
                    .images()
                    .get(i)
                    .ok_or_else(|| Error::invalid(format!("sample index {i} out of range")))?;
                preprocess(img)
            })
            .collect::<Result<Vec<_>>>()?;
        let base = c * CHUNK;
        match medium {
            None => {
                for (j, img) in images.iter().enumerate() {
                    for (d, v) in out.row_mut(base + j).iter_mut().zip(img.values()) {
                        *d = *v as f32;
                    }
                }
            }
            Some(m) => {
                for (j, sp) in m.scatter(&images, Encoding::Amplitude)?.into_iter().enumerate() {
                    let sp = match quantize_bits {
                        Some(b) => quantize(&sp, b)?,
                        None => sp,
                    };
                    out.row_mut(base + j).copy_from_slice(sp.intensities());
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn provenance(
    spec: &DatasetSpec,
    scheme: Scheme,
    split_seed: u64,
    medium_seed: u64,
    part: &str,
    quantize_bits: Option<u32>,
) -> Result<Provenance> {
    Ok(Provenance {
        scheme: scheme.to_string(),
        dataset: serde_json::to_value(spec)?,
        split_seed,
        medium_seed: scheme.scatters().then_some(medium_seed),
        part: part.to_string(),
        preprocessing: Preprocessing::default(),
        quantize_bits: if scheme.scatters() { quantize_bits } else { None },
    })
}

/// Rebuilds a feature file from its provenance record alone.
pub fn regenerate_features(provenance: &Provenance) -> Result<FeatureStore> {
    if provenance.preprocessing != Preprocessing::default() {
        return Err(Error::invalid("only the default 48×48 bilinear preprocessing can be regenerated"));
    }
    let scheme: Scheme = provenance.scheme.parse()?;
    let spec: DatasetSpec = serde_json::from_value(provenance.dataset.clone())?;
    let dataset = load_dataset(&spec)?;
    let (data, split) = repetition_data(&dataset, &spec, provenance.split_seed)?;
    let indices = part_indices(&split, &provenance.part)?;
    let medium = match (scheme.scatters(), provenance.medium_seed) {
        (false, _) => None,
        (true, Some(seed)) => medium_for(scheme, seed, TmStorage::Cached)?,
        (true, None) => return Err(Error::invalid("scattering provenance lacks a medium seed")),
    };
    let x = build_features(&data, indices, scheme, medium.as_ref(), provenance.quantize_bits)?;
    let labels: Vec<usize> = indices.iter().map(|&i| data.labels()[i]).collect();
    FeatureStore::new(x, &labels, provenance.clone())
}

pub(crate) fn part_indices<'a>(split: &'a DatasetSplit, part: &str) -> Result<&'a [usize]> {
    match part {
        "train" => Ok(&split.train),
        "test" => Ok(&split.test),
        _ => Err(Error::invalid(format!("unknown split part '{part}'"))),
    }
}

/// Location of a cached feature file; the name hashes the provenance.
pub(crate) fn cache_path(dir: &Path, provenance: &Provenance) -> Result<PathBuf> {
    let key = serde_json::to_vec(provenance)?;
    let hash = key.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3));
    Ok(dir.join(format!("{}_{}_{hash:016x}.fstr", provenance.scheme, provenance.part)))
}

/// Loads a cached matrix whose stored provenance matches exactly.
pub(crate) fn cached(dir: &Path, provenance: &Provenance) -> Option<FeatureMatrix<f32>> {
    let path = cache_path(dir, provenance).ok()?;
    if !path.exists() {
        return None;
    }
    match load_store(&path) {
        Ok(store) if store.provenance() == provenance => Some(store.into_parts().0),
        Ok(_) => None,
        Err(e) => {
            log::warn!("ignoring unreadable feature cache {}: {e}", path.display());
            None
        }
    }
}

/// Writes `x` to the cache and hands it back.
pub(crate) fn store_cache(dir: &Path, x: FeatureMatrix<f32>, labels: &[usize], provenance: &Provenance) -> Result<FeatureMatrix<f32>> {
    std::fs::create_dir_all(dir)?;
    let store = FeatureStore::new(x, labels, provenance.clone())?;
    save_store(&store, cache_path(dir, provenance)?)?;
    Ok(store.into_parts().0)
}
