//! `root/<class>/<image>` trees.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{DatasetSource, RawDataset, RawImage};
use crate::error::{Error, Result};

const EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

/// Lenient load: undecodable files and empty class folders are skipped with
/// a warning.
pub fn load_image_folder(root: impl AsRef<Path>) -> Result<RawDataset> {
    load_image_folder_with(root, false)
}

/// Classes are the sorted subdirectory names and files are read in sorted
/// order, so the sample order does not depend on the filesystem. With
/// `strict`, any undecodable file or empty class is an error.
pub fn load_image_folder_with(root: impl AsRef<Path>, strict: bool) -> Result<RawDataset> {
    let root = root.as_ref();
    let mut classes: Vec<(String, PathBuf)> = fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
        .filter_map(|e| e.file_name().into_string().ok().map(|n| (n, e.path())))
        .collect();
    classes.sort();

    let mut files = Vec::new();
    let mut names = Vec::new();
    for (name, dir) in classes {
        let mut list: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && has_image_extension(p))
            .collect();
        list.sort();
        if list.is_empty() {
            if strict {
                return Err(Error::validation(format!("class folder {} holds no images", dir.display())));
            }
            log::warn!("skipping empty class folder {}", dir.display());
            continue;
        }
        files.push(list);
        names.push(name);
    }

    let flat: Vec<(usize, &PathBuf)> = files.iter().enumerate().flat_map(|(c, l)| l.iter().map(move |p| (c, p))).collect();
    let decoded: Vec<(usize, &PathBuf, Result<RawImage>)> = flat.into_par_iter().map(|(c, p)| (c, p, decode(p))).collect();

    let mut images = Vec::with_capacity(decoded.len());
    let mut labels = Vec::with_capacity(decoded.len());
    for (c, path, img) in decoded {
        match img {
            Ok(img) => {
                images.push(img);
                labels.push(c);
            }
            Err(e) if strict => return Err(e),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }

    let mut counts = vec![0usize; names.len()];
    labels.iter().for_each(|&l| counts[l] += 1);
    if counts.contains(&0) {
        let keep: Vec<usize> = (0..names.len()).filter(|&c| counts[c] > 0).collect();
        for c in (0..names.len()).filter(|&c| counts[c] == 0) {
            log::warn!("class {:?} has no decodable images; dropping it", names[c]);
        }
        let remap: Vec<Option<usize>> = (0..names.len()).map(|c| keep.iter().position(|&k| k == c)).collect();
        labels.iter_mut().for_each(|l| *l = remap[*l].expect("kept class"));
        names = keep.iter().map(|&c| names[c].clone()).collect();
    }
    RawDataset::new(images, labels, names, DatasetSource::ImageFolder)
}

fn has_image_extension(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .map(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

fn decode(path: &Path) -> Result<RawImage> {
    let img = image::ImageReader::open(path)?.with_guessed_format()?.decode()?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let color = img.color();
    let (channels, pixels) = match (color.has_color(), color.has_alpha()) {
        (false, false) => (1, img.into_luma8().into_raw()),
        (false, true) => (2, img.into_luma_alpha8().into_raw()),
        (true, false) => (3, img.into_rgb8().into_raw()),
        (true, true) => (4, img.into_rgba8().into_raw()),
    };
    RawImage::new(h, w, channels, pixels)
}

