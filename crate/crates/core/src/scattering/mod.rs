//! Multiple-scattering simulation.
//!
//! Each wavelength channel of an input image modulates the amplitude of a
//! coherent field that passes through its own random [`TransmissionMatrix`].
//! The camera records the squared magnitude of the superposed output field,
//!
//! ```text
//! speckle_c[n] = | Σ_m T_c[n, m] · x_c[m] |²
//! ```
//!
//! so the detection step is the only nonlinearity. Channels never mix.

pub mod format;
mod tm;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use tm::{TmStorage, TransmissionMatrix};

/// Side length of a preprocessed input image.
pub const INPUT_SIDE: usize = 48;
/// Pixels per input channel (48 × 48).
pub const INPUT_PIXELS: usize = INPUT_SIDE * INPUT_SIDE;
/// Side length of a recorded speckle channel.
pub const SPECKLE_SIDE: usize = 80;
/// Pixels per speckle channel (80 × 80).
pub const SPECKLE_PIXELS: usize = SPECKLE_SIDE * SPECKLE_SIDE;

/// Images scattered together in one matrix product. Batches are always cut at
/// multiples of this size, so a given image's speckle never depends on how
/// many threads process the batch.
const IMAGE_CHUNK: usize = 32;
/// Output rows of a transmission matrix handled per matrix product.
const ROW_BLOCK: usize = 640;

/// Wavelength channel of the illumination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// 638 nm
    R,
    /// 520 nm
    G,
    /// 445 nm
    B,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    pub fn wavelength_nm(self) -> u32 {
        match self {
            Channel::R => 638,
            Channel::G => 520,
            Channel::B => 445,
        }
    }

    /// Index of the matching plane in an RGB [`ImageTensor`].
    pub fn plane(self) -> usize {
        self.code() as usize
    }

    pub fn code(self) -> u8 {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Channel::ALL.get(code as usize).copied()
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
        };
        write!(f, "{name} ({} nm)", self.wavelength_nm())
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r" | "red" | "638" => Ok(Channel::R),
            "g" | "green" | "520" => Ok(Channel::G),
            "b" | "blue" | "445" => Ok(Channel::B),
            _ => Err(Error::invalid(format!("unknown channel '{s}'"))),
        }
    }
}

/// Input image as displayed on the modulator: channel-planar values in
/// `[0, 1]`. Preprocessing always produces 48 × 48 × 3.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl ImageTensor {
    /// `values` is channel-planar: plane `c` occupies `c·h·w .. (c+1)·h·w`.
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::validation(format!(
                "image dimensions must be nonzero, got {height}×{width}×{channels}"
            )));
        }
        if values.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "image buffer holds {} values, expected {height}×{width}×{channels}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::validation(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    /// Like [`ImageTensor::new`] but clamps into `[0, 1]` (NaN becomes 0).
    pub fn clamped(height: usize, width: usize, channels: usize, mut values: Vec<f64>) -> Result<Self> {
        for v in &mut values {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(height, width, channels, values)
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    values.push(f(c, y, x));
                }
            }
        }
        Self::new(height, width, channels, values)
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

    pub fn pixels_per_channel(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixels_per_channel();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.values[(c * self.height + y) * self.width + x]
    }

    /// Multiplies every value by `alpha`; fails if the result leaves `[0, 1]`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.channels,
            self.values.iter().map(|v| v * alpha).collect(),
        )
    }
}

/// Intensity recorded by the simulated camera, one plane per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecklePattern {
    height: usize,
    width: usize,
    channels: Vec<Channel>,
    intensities: Vec<f32>,
}

impl SpecklePattern {
    pub fn new(height: usize, width: usize, channels: Vec<Channel>, intensities: Vec<f32>) -> Result<Self> {
        if intensities.len() != height * width * channels.len() {
            return Err(Error::invalid(format!(
                "speckle buffer holds {} values, expected {height}×{width}×{}",
                intensities.len(),
                channels.len()
            )));
        }
        if let Some(v) = intensities.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::validation(format!("speckle intensity {v} is not a finite nonnegative value")));
        }
        Ok(Self {
            height,
            width,
            channels,
            intensities,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// All planes back to back, in [`SpecklePattern::channels`] order.
    pub fn intensities(&self) -> &[f32] {
        &self.intensities
    }

    pub fn into_intensities(self) -> Vec<f32> {
        self.intensities
    }

    pub fn plane(&self, i: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.intensities[i * n..(i + 1) * n]
    }
}

/// How a pixel value drives the optical field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Pixel value is the field amplitude; detected intensity is quadratic in it.
    #[default]
    Amplitude,
    /// Pixel value is the optical intensity; the field amplitude is its square root.
    SqrtIntensity,
}

impl Encoding {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Encoding::Amplitude => v,
            Encoding::SqrtIntensity => v.sqrt(),
        }
    }
}

/// Shape a speckle plane of `n_out` pixels is reported in: square when
/// possible, a single row otherwise.
pub fn output_shape(n_out: usize) -> (usize, usize) {
    let side = (n_out as f64).sqrt().round() as usize;
    if side * side == n_out {
        (side, side)
    } else {
        (1, n_out)
    }
}

/// Scatters one image through one matrix per selected channel, amplitude
/// encoding.
pub fn scatter(image: &ImageTensor, tms: &[TransmissionMatrix]) -> Result<SpecklePattern> {
    scatter_with(image, tms, Encoding::Amplitude)
}

pub fn scatter_with(image: &ImageTensor, tms: &[TransmissionMatrix], encoding: Encoding) -> Result<SpecklePattern> {
    let mut out = scatter_batch(std::slice::from_ref(image), tms, encoding)?;
    Ok(out.pop().expect("one pattern per image"))
}

/// Scatters a batch of images. Work is split into fixed chunks and run in
/// parallel; results do not depend on the thread count.
pub fn scatter_batch(
    images: &[ImageTensor],
    tms: &[TransmissionMatrix],
    encoding: Encoding,
) -> Result<Vec<SpecklePattern>> {
    let n_out = check_compat(images, tms)?;
    let (h, w) = output_shape(n_out);
    let channels: Vec<Channel> = tms.iter().map(|t| t.channel()).collect();
    let chunks: Vec<Vec<SpecklePattern>> = images
        .par_chunks(IMAGE_CHUNK)
        .map(|chunk| {
            let mut planes = vec![vec![0f32; n_out * tms.len()]; chunk.len()];
            for (slot, tm) in tms.iter().enumerate() {
                let x = input_matrix(chunk, tm.channel(), encoding);
                fields(x.as_ref(), tm, |n0, ure, uim| {
                    for (i, plane) in planes.iter_mut().enumerate() {
                        let dst = &mut plane[slot * n_out + n0..slot * n_out + n0 + ure.ncols()];
                        for (j, d) in dst.iter_mut().enumerate() {
                            let (a, b) = (ure[(i, j)], uim[(i, j)]);
                            *d = (a * a + b * b) as f32;
                        }
                    }
                });
            }
            planes
                .into_iter()
                .map(|p| SpecklePattern {
                    height: h,
                    width: w,
                    channels: channels.clone(),
                    intensities: p,
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Complex output field `T · x` before detection, for the channel of `tm`.
pub fn field(image: &ImageTensor, tm: &TransmissionMatrix, encoding: Encoding) -> Result<Vec<Complex64>> {
    check_compat(std::slice::from_ref(image), std::slice::from_ref(tm))?;
    let x = input_matrix(std::slice::from_ref(image), tm.channel(), encoding);
    let mut out = vec![Complex64::new(0.0, 0.0); tm.n_out()];
    fields(x.as_ref(), tm, |n0, ure, uim| {
        for j in 0..ure.ncols() {
            out[n0 + j] = Complex64::new(ure[(0, j)], uim[(0, j)]);
        }
    });
    Ok(out)
}

/// Re-quantizes a pattern to `bit_depth` bits: the pattern maximum maps to the
/// top code and values are returned normalized to `[0, 1]`.
pub fn quantize(sp: &SpecklePattern, bit_depth: u32) -> Result<SpecklePattern> {
    if !(1..=16).contains(&bit_depth) {
        return Err(Error::invalid(format!("bit depth {bit_depth} outside [1, 16]")));
    }
    let top = ((1u32 << bit_depth) - 1) as f64;
    let max = sp.intensities.iter().copied().fold(0f32, f32::max) as f64;
    let intensities = if max > 0.0 {
        sp.intensities
            .iter()
            .map(|&v| ((v as f64 / max * top).round() / top) as f32)
            .collect()
    } else {
        vec![0.0; sp.intensities.len()]
    };
    Ok(SpecklePattern {
        intensities,
        ..sp.clone()
    })
}

/// A simulated scattering medium: one transmission matrix per channel, all
/// drawn from the same seed.
#[derive(Debug, Clone)]
pub struct Medium {
    tms: Vec<TransmissionMatrix>,
}

impl Medium {
    pub fn generate(
        seed: u64,
        channels: &[Channel],
        m_in: usize,
        n_out: usize,
        storage: TmStorage,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("a medium needs at least one channel"));
        }
        let tms = channels
            .iter()
            .map(|&c| TransmissionMatrix::generate_with(m_in, n_out, seed, c, storage))
            .collect::<Result<_>>()?;
        Ok(Self { tms })
    }

    pub fn from_matrices(tms: Vec<TransmissionMatrix>) -> Result<Self> {
        if tms.is_empty() {
            return Err(Error::invalid("a medium needs at least one channel"));
        }
        if tms.iter().any(|t| t.m_in() != tms[0].m_in() || t.n_out() != tms[0].n_out()) {
            return Err(Error::invalid("all channel matrices of a medium must share dimensions"));
        }
        Ok(Self { tms })
    }

    pub fn matrices(&self) -> &[TransmissionMatrix] {
        &self.tms
    }

    /// Length of a flattened speckle pattern.
    pub fn feature_dim(&self) -> usize {
        self.tms.len() * self.tms[0].n_out()
    }

    pub fn scatter(&self, images: &[ImageTensor], encoding: Encoding) -> Result<Vec<SpecklePattern>> {
        scatter_batch(images, &self.tms, encoding)
    }
}

fn check_compat(images: &[ImageTensor], tms: &[TransmissionMatrix]) -> Result<usize> {
    let first = tms
        .first()
        .ok_or_else(|| Error::invalid("at least one transmission matrix is required"))?;
    for tm in tms {
        if tm.n_out() != first.n_out() {
            return Err(Error::invalid("transmission matrices disagree on n_out"));
        }
    }
    for img in images {
        for tm in tms {
            if img.pixels_per_channel() != tm.m_in() {
                return Err(Error::invalid(format!(
                    "image has {} pixels per channel but the {} matrix expects {}",
                    img.pixels_per_channel(),
                    tm.channel(),
                    tm.m_in()
                )));
            }
            if tm.channel().plane() >= img.channels() {
                return Err(Error::invalid(format!(
                    "image has {} channel(s); {} is not available",
                    img.channels(),
                    tm.channel()
                )));
            }
        }
    }
    Ok(first.n_out())
}

/// `images.len() × m_in` matrix of encoded amplitudes for one channel.
fn input_matrix(images: &[ImageTensor], channel: Channel, encoding: Encoding) -> Mat<f64> {
    let m_in = images[0].pixels_per_channel();
    Mat::from_fn(images.len(), m_in, |i, m| encoding.apply(images[i].plane(channel.plane())[m]))
}

/// Computes `x · Tᵀ` block by block, handing `(first_row, re, im)` views of
/// `batch × rows` field blocks to `sink`.
fn fields(x: MatRef<'_, f64>, tm: &TransmissionMatrix, mut sink: impl FnMut(usize, MatRef<'_, f64>, MatRef<'_, f64>)) {
    let batch = x.nrows();
    let mut ure = Mat::<f64>::zeros(batch, ROW_BLOCK);
    let mut uim = Mat::<f64>::zeros(batch, ROW_BLOCK);
    tm.for_each_row_block(ROW_BLOCK, |n0, tre, tim| {
        let rows = tre.ncols();
        let mut re = ure.as_mut().subcols_mut(0, rows);
        matmul(re.as_mut(), Accum::Replace, x, tre, 1.0, Par::Seq);
        let mut im = uim.as_mut().subcols_mut(0, rows);
        matmul(im.as_mut(), Accum::Replace, x, tim, 1.0, Par::Seq);
        sink(n0, ure.as_ref().subcols(0, rows), uim.as_ref().subcols(0, rows));
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_tm(seed: u64, channel: Channel) -> TransmissionMatrix {
        TransmissionMatrix::generate(4, 3, seed, channel).unwrap()
    }

    fn gray(h: usize, w: usize, v: &[f64]) -> ImageTensor {
        let mut values = v.to_vec();
        values.extend_from_slice(v);
        values.extend_from_slice(v);
        ImageTensor::new(h, w, 3, values).unwrap()
    }

    #[test]
    fn zero_image_gives_zero_speckle() {
        let tm = TransmissionMatrix::generate(INPUT_PIXELS, 100, 1, Channel::R).unwrap();
        let img = ImageTensor::zeros(INPUT_SIDE, INPUT_SIDE, 3).unwrap();
        let sp = scatter(&img, &[tm]).unwrap();
        assert!(sp.intensities().iter().all(|&v| v == 0.0));
        assert_eq!((sp.height(), sp.width()), (10, 10));
    }

    #[test]
    fn matches_brute_force_on_small_input() {
        // 2×2 image, m_in = 4, n_out = 3, seed 123: direct complex dot products.
        let tm = small_tm(123, Channel::R);
        let px = [0.25, 1.0, 0.0, 0.5];
        let img = gray(2, 2, &px);
        let sp = scatter(&img, std::slice::from_ref(&tm)).unwrap();
        for n in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &x) in px.iter().enumerate() {
                acc += tm.entry(n, m) * x;
            }
            let expect = acc.norm_sqr() as f32;
            let got = sp.intensities()[n];
            assert!((got - expect).abs() <= 2.0 * f32::EPSILON * expect, "{got} vs {expect}");
        }
    }

    #[test]
    fn one_hot_is_psf_intensity() {
        let tm = TransmissionMatrix::generate(9, 25, 5, Channel::G).unwrap();
        for m in 0..9 {
            let img = ImageTensor::from_fn(3, 3, 3, |_, y, x| if y * 3 + x == m { 1.0 } else { 0.0 }).unwrap();
            let sp = scatter(&img, std::slice::from_ref(&tm)).unwrap();
            let psf = tm.psf(m).unwrap();
            for (a, z) in sp.intensities().iter().zip(&psf) {
                assert_eq!(*a, z.norm_sqr() as f32);
            }
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let tm = small_tm(1, Channel::R);
        let img = ImageTensor::zeros(3, 3, 3).unwrap();
        assert!(matches!(scatter(&img, &[tm]), Err(Error::InvalidArgument(_))));
        let tm = small_tm(1, Channel::B);
        let img = ImageTensor::zeros(2, 2, 1).unwrap();
        assert!(matches!(scatter(&img, &[tm]), Err(Error::InvalidArgument(_))));
        assert!(scatter(&img, &[]).is_err());
    }

    #[test]
    fn batch_matches_single_image() {
        let tm = TransmissionMatrix::generate(16, 50, 8, Channel::R).unwrap();
        let images: Vec<_> = (0..70)
            .map(|k| ImageTensor::from_fn(4, 4, 1, |_, y, x| ((k * 7 + y * 4 + x) % 11) as f64 / 10.0).unwrap())
            .collect();
        let batch = scatter_batch(&images, std::slice::from_ref(&tm), Encoding::Amplitude).unwrap();
        for (img, sp) in images.iter().zip(&batch) {
            let single = scatter(img, std::slice::from_ref(&tm)).unwrap();
            assert_eq!(single.intensities(), sp.intensities());
        }
    }

    #[test]
    fn sqrt_encoding_is_linear_in_scale() {
        let tm = TransmissionMatrix::generate(4, 3, 2, Channel::R).unwrap();
        let img = gray(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        let half = img.scaled(0.5).unwrap();
        let a = scatter_with(&img, std::slice::from_ref(&tm), Encoding::SqrtIntensity).unwrap();
        let b = scatter_with(&half, std::slice::from_ref(&tm), Encoding::SqrtIntensity).unwrap();
        for (x, y) in a.intensities().iter().zip(b.intensities()) {
            assert!((0.5 * x - y).abs() <= 1e-6 * x.max(1e-30));
        }
    }

    #[test]
    fn quantize_edge_cases() {
        let zero = SpecklePattern::new(2, 2, vec![Channel::R], vec![0.0; 4]).unwrap();
        assert_eq!(quantize(&zero, 8).unwrap().intensities(), &[0.0; 4]);
        let flat = SpecklePattern::new(2, 2, vec![Channel::R], vec![3.5; 4]).unwrap();
        assert_eq!(quantize(&flat, 8).unwrap().intensities(), &[1.0; 4]);
        assert!(quantize(&flat, 0).is_err());
        assert!(quantize(&flat, 17).is_err());
    }

    #[test]
    fn quantize_error_bound_at_eight_bits() {
        let values: Vec<f32> = (0..400).map(|i| ((i * 7919) % 1000) as f32 * 0.013).collect();
        let sp = SpecklePattern::new(20, 20, vec![Channel::G], values.clone()).unwrap();
        let q = quantize(&sp, 8).unwrap();
        let max = values.iter().copied().fold(0.0, f32::max) as f64;
        for (v, qv) in values.iter().zip(q.intensities()) {
            let dev = (*v as f64 / max - *qv as f64).abs();
            assert!(dev <= 1.0 / (2.0 * 255.0) + 1e-7, "{dev}");
        }
    }

    #[test]
    fn image_tensor_validation() {
        assert!(ImageTensor::new(2, 2, 1, vec![0.0, 0.5, 1.0, 1.5]).is_err());
        assert!(ImageTensor::new(0, 2, 1, vec![]).is_err());
        let c = ImageTensor::clamped(1, 2, 1, vec![-1.0, 2.0]).unwrap();
        assert_eq!(c.values(), &[0.0, 1.0]);
    }

    #[test]
    fn channel_parsing() {
        assert_eq!("r".parse::<Channel>().unwrap(), Channel::R);
        assert_eq!("445".parse::<Channel>().unwrap(), Channel::B);
        assert!("x".parse::<Channel>().is_err());
        assert_eq!(Channel::from_code(1), Some(Channel::G));
        assert_eq!(Channel::from_code(3), None);
    }
}
