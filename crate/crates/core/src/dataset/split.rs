use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RawDataset;
use crate::error::{Error, Result};

pub const TRAIN_FRACTION: f64 = 0.85;
const TRAIN_PERCENT: usize = 85;
const SUBSAMPLE_STREAM: u64 = 1;

/// Disjoint train/test index lists covering every sample exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub split_seed: u64,
}

impl DatasetSplit {
    pub fn train_fraction(&self) -> f64 {
        TRAIN_FRACTION
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Integer apportionment of `total` seats among classes of the given sizes.
///
/// Class `c` is owed `counts[c]·num/den` seats. Each gets the floor of its
/// quota and the remaining seats go to the largest fractional remainders,
/// ties to the lower class index. `total` must lie between the sum of floors
/// and the sum of ceilings.
pub fn apportion(counts: &[usize], num: usize, den: usize, total: usize) -> Vec<usize> {
    let mut seats: Vec<usize> = counts.iter().map(|&n| n * num / den).collect();
    let mut order: Vec<(usize, usize)> = counts.iter().enumerate().map(|(c, &n)| (n * num % den, c)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let given: usize = seats.iter().sum();
    for &(rem, c) in order.iter().take(total.saturating_sub(given)) {
        debug_assert!(rem > 0);
        seats[c] += 1;
    }
    seats
}

pub fn split(dataset: &RawDataset, split_seed: u64) -> Result<DatasetSplit> {
    split_labels(dataset.labels(), dataset.classes(), split_seed)
}

/// Stratified 85/15 split.
///
/// The train set holds `⌈0.85·N⌉` samples, apportioned among classes by
/// [`apportion`]. Each class is shuffled with a ChaCha8 stream seeded by
/// `split_seed`, then both lists are shuffled so classes interleave.
pub fn split_labels(labels: &[usize], classes: usize, split_seed: u64) -> Result<DatasetSplit> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::validation(format!("cannot split a dataset of {n} sample(s)")));
    }
    let by_class = group(labels, classes)?;
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    if let Some(c) = counts.iter().position(|&k| k == 1) {
        log::warn!("class {c} has a single sample; it cannot appear in both train and test");
    }
    let total = (n * TRAIN_PERCENT).div_ceil(100);
    let quota = apportion(&counts, TRAIN_PERCENT, 100, total);

    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    let mut train = Vec::with_capacity(total);
    let mut test = Vec::with_capacity(n - total);
    for (mut members, q) in by_class.into_iter().zip(quota) {
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..q]);
        test.extend_from_slice(&members[q..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok(DatasetSplit { train, test, split_seed })
}

/// Stratified sample of `size` indices, returned in ascending order. Class
/// shares follow [`apportion`].
pub fn subsample(labels: &[usize], classes: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if size == 0 || size > n {
        return Err(Error::invalid(format!("cannot draw {size} of {n} samples")));
    }
    let by_class = group(labels, classes)?;
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let quota = apportion(&counts, size, n, size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SUBSAMPLE_STREAM);
    let mut out = Vec::with_capacity(size);
    for (mut members, q) in by_class.into_iter().zip(quota) {
        members.shuffle(&mut rng);
        out.extend_from_slice(&members[..q]);
    }
    out.sort_unstable();
    Ok(out)
}

fn group(labels: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or_else(|| Error::validation(format!("label {l} out of range for {classes} classes")))?
            .push(i);
    }
    Ok(by_class)
}
