use std::f64::consts::TAU;

use faer::{Mat, MatRef};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Channel;
use crate::error::{Error, Result};

/// Each complex entry consumes two `u64` draws, i.e. four 32-bit ChaCha words.
const WORDS_PER_ENTRY: u128 = 4;

/// Output rows generated per parallel task. Fixed so that generation order
/// never depends on the thread count.
const GEN_ROWS: usize = 64;

/// Largest dimension accepted; keeps `m_in * n_out` and the file header in range.
const MAX_DIM: usize = u32::MAX as usize;

/// Where the entries of a [`TransmissionMatrix`] live.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TmStorage {
    /// Generated once and held in memory: `16 · m_in · n_out` bytes per
    /// channel, about 236 MB at 2304 × 6400.
    #[default]
    Cached,
    /// Entries are regenerated block by block whenever they are needed.
    /// Trades repeated generation work for a near-zero footprint.
    OnTheFly,
}

/// Complex random linear map from one input channel (`m_in` pixels) to one
/// speckle channel (`n_out` pixels). Column `m` is the point-spread function
/// of input pixel `m`.
///
/// Generated matrices have i.i.d. circularly-symmetric complex Gaussian
/// entries with `E|t|² = 1/m_in`, drawn from a ChaCha20 stream keyed on the
/// seed with the channel selecting the stream. Entry `(n, m)` sits at a fixed
/// counter offset, so any block can be regenerated independently and the
/// result is bit-identical regardless of generation order.
#[derive(Debug, Clone)]
pub struct TransmissionMatrix {
    seed: u64,
    channel: Channel,
    m_in: usize,
    n_out: usize,
    entries: Option<Planes>,
}

/// Row-major real and imaginary planes: row `n` (output pixel) is contiguous.
#[derive(Debug, Clone, PartialEq)]
struct Planes {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TransmissionMatrix {
    /// Generates and caches a matrix.
    pub fn generate(m_in: usize, n_out: usize, seed: u64, channel: Channel) -> Result<Self> {
        Self::generate_with(m_in, n_out, seed, channel, TmStorage::Cached)
    }

    pub fn generate_with(
        m_in: usize,
        n_out: usize,
        seed: u64,
        channel: Channel,
        storage: TmStorage,
    ) -> Result<Self> {
        check_dims(m_in, n_out)?;
        let entries = match storage {
            TmStorage::Cached => {
                let len = m_in * n_out;
                let mut re = vec![0.0; len];
                let mut im = vec![0.0; len];
                re.par_chunks_mut(GEN_ROWS * m_in)
                    .zip(im.par_chunks_mut(GEN_ROWS * m_in))
                    .enumerate()
                    .for_each(|(block, (re, im))| {
                        fill_rows(seed, channel, m_in, block * GEN_ROWS, re, im);
                    });
                Some(Planes { re, im })
            }
            TmStorage::OnTheFly => None,
        };
        Ok(Self {
            seed,
            channel,
            m_in,
            n_out,
            entries,
        })
    }

    /// Wraps explicit entries, e.g. a matrix read from disk. `entries` is
    /// row-major `n_out × m_in`.
    pub fn from_entries(
        m_in: usize,
        n_out: usize,
        seed: u64,
        channel: Channel,
        entries: &[Complex64],
    ) -> Result<Self> {
        check_dims(m_in, n_out)?;
        if entries.len() != m_in * n_out {
            return Err(Error::invalid(format!(
                "expected {} entries for {n_out}×{m_in}, got {}",
                m_in * n_out,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("transmission matrix has non-finite entries"));
        }
        Ok(Self {
            seed,
            channel,
            m_in,
            n_out,
            entries: Some(Planes {
                re: entries.iter().map(|z| z.re).collect(),
                im: entries.iter().map(|z| z.im).collect(),
            }),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn m_in(&self) -> usize {
        self.m_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn storage(&self) -> TmStorage {
        if self.entries.is_some() {
            TmStorage::Cached
        } else {
            TmStorage::OnTheFly
        }
    }

    /// Entry `(n, m)`: coupling from input pixel `m` to output pixel `n`.
    pub fn entry(&self, n: usize, m: usize) -> Complex64 {
        assert!(n < self.n_out && m < self.m_in, "entry ({n}, {m}) out of range");
        match &self.entries {
            Some(p) => {
                let i = n * self.m_in + m;
                Complex64::new(p.re[i], p.im[i])
            }
            None => {
                let mut rng = entry_stream(self.seed, self.channel, (n * self.m_in + m) as u128);
                let (re, im) = draw(&mut rng, inv_sqrt(self.m_in));
                Complex64::new(re, im)
            }
        }
    }

    /// All entries, row-major `n_out × m_in`.
    pub fn entries(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.m_in * self.n_out);
        self.for_each_row_block(self.n_out, |_, re, im| {
            for r in 0..re.ncols() {
                for m in 0..self.m_in {
                    out.push(Complex64::new(re[(m, r)], im[(m, r)]));
                }
            }
        });
        out
    }

    /// Point-spread function of input pixel `pixel`: column `pixel` of the
    /// matrix, one complex amplitude per output pixel.
    pub fn psf(&self, pixel: usize) -> Result<Vec<Complex64>> {
        if pixel >= self.m_in {
            return Err(Error::invalid(format!(
                "pixel index {pixel} out of range for m_in = {}",
                self.m_in
            )));
        }
        Ok((0..self.n_out).map(|n| self.entry(n, pixel)).collect())
    }

    /// Visits the transposed matrix in blocks of `block` output rows. The
    /// callback gets the first output row and `m_in × rows` views of the real
    /// and imaginary parts.
    pub(crate) fn for_each_row_block(
        &self,
        block: usize,
        mut f: impl FnMut(usize, MatRef<'_, f64>, MatRef<'_, f64>),
    ) {
        let block = block.max(1);
        let mut scratch: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut n0 = 0;
        while n0 < self.n_out {
            let rows = block.min(self.n_out - n0);
            let span = n0 * self.m_in..(n0 + rows) * self.m_in;
            match &self.entries {
                Some(p) => f(
                    n0,
                    MatRef::from_column_major_slice(&p.re[span.clone()], self.m_in, rows),
                    MatRef::from_column_major_slice(&p.im[span], self.m_in, rows),
                ),
                None => {
                    let (re, im) = scratch.get_or_insert_with(|| {
                        (vec![0.0; block * self.m_in], vec![0.0; block * self.m_in])
                    });
                    let len = rows * self.m_in;
                    fill_rows(self.seed, self.channel, self.m_in, n0, &mut re[..len], &mut im[..len]);
                    f(
                        n0,
                        MatRef::from_column_major_slice(&re[..len], self.m_in, rows),
                        MatRef::from_column_major_slice(&im[..len], self.m_in, rows),
                    )
                }
            }
            n0 += rows;
        }
    }

    /// Materializes the real and imaginary planes as `n_out × m_in` matrices.
    pub fn to_mats(&self) -> (Mat<f64>, Mat<f64>) {
        let mut re = Mat::zeros(self.n_out, self.m_in);
        let mut im = Mat::zeros(self.n_out, self.m_in);
        self.for_each_row_block(GEN_ROWS, |n0, bre, bim| {
            for r in 0..bre.ncols() {
                for m in 0..self.m_in {
                    re[(n0 + r, m)] = bre[(m, r)];
                    im[(n0 + r, m)] = bim[(m, r)];
                }
            }
        });
        (re, im)
    }
}

impl PartialEq for TransmissionMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.channel == other.channel
            && self.m_in == other.m_in
            && self.n_out == other.n_out
            && self.entries() == other.entries()
    }
}

fn check_dims(m_in: usize, n_out: usize) -> Result<()> {
    if m_in == 0 || n_out == 0 {
        return Err(Error::invalid(format!(
            "transmission matrix needs m_in ≥ 1 and n_out ≥ 1, got {m_in}×{n_out}"
        )));
    }
    if m_in > MAX_DIM || n_out > MAX_DIM || m_in.checked_mul(n_out).is_none() {
        return Err(Error::invalid(format!(
            "transmission matrix dimensions {n_out}×{m_in} overflow"
        )));
    }
    Ok(())
}

#[inline]
fn inv_sqrt(m_in: usize) -> f64 {
    (1.0 / m_in as f64).sqrt()
}

fn entry_stream(seed: u64, channel: Channel, entry: u128) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(channel.code() as u64);
    rng.set_word_pos(entry * WORDS_PER_ENTRY);
    rng
}

/// One circular complex Gaussian draw with `E|z|² = scale²` (Box–Muller).
#[inline]
fn draw(rng: &mut ChaCha20Rng, scale: f64) -> (f64, f64) {
    const UNIT: f64 = 1.0 / (1u64 << 53) as f64;
    let a = rng.next_u64();
    let b = rng.next_u64();
    // u1 in (0, 1] keeps the logarithm finite.
    let u1 = ((a >> 11) + 1) as f64 * UNIT;
    let phase = (b >> 11) as f64 * UNIT * TAU;
    let radius = (-u1.ln()).sqrt() * scale;
    let (s, c) = phase.sin_cos();
    (radius * c, radius * s)
}

/// Fills whole output rows starting at `first_row`; `re`/`im` are row-major.
fn fill_rows(seed: u64, channel: Channel, m_in: usize, first_row: usize, re: &mut [f64], im: &mut [f64]) {
    debug_assert_eq!(re.len(), im.len());
    let mut rng = entry_stream(seed, channel, (first_row * m_in) as u128);
    let scale = inv_sqrt(m_in);
    for (r, i) in re.iter_mut().zip(im.iter_mut()) {
        let (a, b) = draw(&mut rng, scale);
        *r = a;
        *i = b;
    }
}
