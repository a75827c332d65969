use super::RawImage;
use crate::error::{Error, Result};
use crate::scattering::{ImageTensor, INPUT_SIDE};

/// Anything that can be sampled as an RGB image with values in `[0, 1]`.
pub trait PixelSource {
    fn height(&self) -> usize;
    fn width(&self) -> usize;
    /// Value of RGB channel `c` (0..3) at row `y`, column `x`.
    fn rgb(&self, c: usize, y: usize, x: usize) -> f64;
}

impl PixelSource for RawImage {
    fn height(&self) -> usize {
        RawImage::height(self)
    }

    fn width(&self) -> usize {
        RawImage::width(self)
    }

    fn rgb(&self, c: usize, y: usize, x: usize) -> f64 {
        let ch = self.channels();
        // Gray (with or without alpha) is replicated; alpha is dropped.
        let c = if ch <= 2 { 0 } else { c };
        self.pixels()[(y * RawImage::width(self) + x) * ch + c] as f64 / 255.0
    }
}

impl PixelSource for ImageTensor {
    fn height(&self) -> usize {
        ImageTensor::height(self)
    }

    fn width(&self) -> usize {
        ImageTensor::width(self)
    }

    fn rgb(&self, c: usize, y: usize, x: usize) -> f64 {
        let c = if self.channels() < 3 { 0 } else { c };
        self.get(c, y, x)
    }
}

/// Stretches any image to the 48 × 48 × 3 modulator input.
pub fn preprocess<P: PixelSource + ?Sized>(image: &P) -> Result<ImageTensor> {
    resize_bilinear(image, INPUT_SIDE, INPUT_SIDE)
}

/// Bilinear resize with pixel-centre alignment and edge clamping.
///
/// Output pixel `(y, x)` samples the source at
/// `((y + ½)·h_in/h_out − ½, (x + ½)·w_in/w_out − ½)`, clamped to the image.
/// A same-size resize copies values exactly.
pub fn resize_bilinear<P: PixelSource + ?Sized>(image: &P, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    let (h, w) = (image.height(), image.width());
    if h == 0 || w == 0 {
        return Err(Error::validation(format!("cannot preprocess a {h}×{w} image")));
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid(format!("target size {out_h}×{out_w} is empty")));
    }
    let ys = taps(h, out_h);
    let xs = taps(w, out_w);
    let mut values = Vec::with_capacity(3 * out_h * out_w);
    for c in 0..3 {
        for &(y0, y1, ty) in &ys {
            for &(x0, x1, tx) in &xs {
                let top = lerp(image.rgb(c, y0, x0), image.rgb(c, y0, x1), tx);
                let bottom = lerp(image.rgb(c, y1, x0), image.rgb(c, y1, x1), tx);
                values.push(lerp(top, bottom, ty));
            }
        }
    }
    ImageTensor::clamped(out_h, out_w, 3, values)
}

fn taps(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}
