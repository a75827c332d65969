#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speckle_core::FeatureMatrix;

/// Gaussian elimination with partial pivoting; solves `A X = B` for square `A`.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-300, "oracle system is singular");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[row][j] -= f * a[col][j];
            }
            for j in 0..b[row].len() {
                b[row][j] -= f * b[col][j];
            }
        }
    }
    let m = b[0].len();
    let mut x = vec![vec![0.0; m]; n];
    for row in (0..n).rev() {
        for j in 0..m {
            let mut s = b[row][j];
            for c in row + 1..n {
                s -= a[row][c] * x[c][j];
            }
            x[row][j] = s / a[row][row];
        }
    }
    x
}

/// Ridge weights `(D+1) × K` from the augmented normal equations, with the
/// bias row left unpenalized.
pub fn ridge_oracle(x: &[Vec<f64>], labels: &[usize], k: usize, lambda: f64) -> Vec<Vec<f64>> {
    let targets: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| (0..k).map(|c| if c == y { 1.0 } else { 0.0 }).collect())
        .collect();
    ridge_oracle_targets(x, &targets, lambda)
}

/// As [`ridge_oracle`] for arbitrary real targets, one row per sample.
pub fn ridge_oracle_targets(x: &[Vec<f64>], targets: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    let d = x[0].len();
    let k = targets[0].len();
    let p = d + 1;
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![vec![0.0; k]; p];
    for (row, y) in x.iter().zip(targets) {
        let h: Vec<f64> = row.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..p {
            for j in 0..p {
                a[i][j] += h[i] * h[j];
            }
            for c in 0..k {
                b[i][c] += h[i] * y[c];
            }
        }
    }
    for (i, r) in a.iter_mut().enumerate().take(d) {
        r[i] += lambda;
    }
    gauss_solve(a, b)
}

pub fn rel_frobenius(got: &[f64], want: &[Vec<f64>]) -> f64 {
    let flat: Vec<f64> = want.iter().flatten().copied().collect();
    let num: f64 = got.iter().zip(&flat).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = flat.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

/// Standard-normal features and uniform labels.
pub fn random_problem(seed: u64, s: usize, d: usize, k: usize) -> (FeatureMatrix<f64>, Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..s)
        .map(|_| (0..d).map(|_| normal(&mut rng)).collect())
        .collect();
    let labels = (0..s).map(|_| rng.random_range(0..k)).collect();
    (FeatureMatrix::from_rows(&rows).unwrap(), rows, labels)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Writes an IDX image/label pair for `images` (each `rows × cols` bytes).
pub fn write_idx(dir: &Path, rows: u32, cols: u32, images: &[Vec<u8>], labels: &[u8]) {
    let mut img = Vec::new();
    img.extend_from_slice(&0x0803u32.to_be_bytes());
    img.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img.extend_from_slice(&rows.to_be_bytes());
    img.extend_from_slice(&cols.to_be_bytes());
    images.iter().for_each(|p| img.extend_from_slice(p));
    let mut lab = Vec::new();
    lab.extend_from_slice(&0x0801u32.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("train-images-idx3-ubyte"), img).unwrap();
    std::fs::write(dir.join("train-labels-idx1-ubyte"), lab).unwrap();
}

/// 40 samples, two classes of 12 × 12 images: class 0 is brighter on the
/// left half, class 1 on the right, with seeded noise.
pub fn tiny_two_class(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40u8 {
        let class = i % 2;
        let img = (0..144)
            .map(|p| {
                let left = p % 12 < 6;
                let base: u8 = if left == (class == 0) { 170 } else { 60 };
                base.saturating_add(rng.random_range(0..60))
            })
            .collect();
        images.push(img);
        labels.push(class);
    }
    write_idx(dir, 12, 12, &images, &labels);
}
