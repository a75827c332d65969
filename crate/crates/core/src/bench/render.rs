use std::path::Path;

use image::{Rgb, RgbImage};

use super::font::{draw_text, text_height, text_width};
use crate::error::{Error, Result};
use crate::ridge::ConfusionMatrix;

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const DARK: [f64; 3] = [8.0, 48.0, 107.0];

/// Geometry of a rendered confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionStyle {
    /// Side of one cell in pixels.
    pub cell: u32,
    /// Width of the label strip above and left of the grid.
    pub margin: u32,
}

impl Default for ConfusionStyle {
    fn default() -> Self {
        Self { cell: 40, margin: 24 }
    }
}

impl ConfusionStyle {
    /// `(width, height)` of the image for `classes` classes.
    pub fn image_size(&self, classes: usize) -> (u32, u32) {
        let side = self.margin + self.cell * classes as u32;
        (side, side)
    }
}

/// Heatmap shaded by each row's share, with the count printed in every cell
/// that has room for it. Rows are true classes, columns predictions.
pub fn confusion_image(cm: &ConfusionMatrix, style: ConfusionStyle) -> Result<RgbImage> {
    let k = cm.classes();
    if k == 0 || style.cell == 0 {
        return Err(Error::invalid("nothing to render"));
    }
    let (w, h) = style.image_size(k);
    let mut img = RgbImage::from_pixel(w, h, WHITE);
    let sums = cm.row_sums();
    let th = text_height(1);
    for t in 0..k {
        for p in 0..k {
            let share = if sums[t] > 0 { cm.get(t, p) as f64 / sums[t] as f64 } else { 0.0 };
            let fill = shade(share);
            let x0 = style.margin + p as u32 * style.cell;
            let y0 = style.margin + t as u32 * style.cell;
            for y in y0..y0 + style.cell {
                for x in x0..x0 + style.cell {
                    img.put_pixel(x, y, fill);
                }
            }
            let label = cm.get(t, p).to_string();
            let tw = text_width(&label, 1);
            if tw + 2 <= style.cell && th + 2 <= style.cell {
                let ink = if share > 0.5 { WHITE } else { BLACK };
                let tx = x0 + (style.cell - tw) / 2;
                let ty = y0 + (style.cell - th) / 2;
                draw_text(&mut img, tx as i64, ty as i64, &label, ink, 1);
            }
        }
    }
    for c in 0..k {
        let label = c.to_string();
        let tw = text_width(&label, 1);
        if tw + 2 > style.cell || th + 2 > style.margin {
            continue;
        }
        let centre = style.margin + c as u32 * style.cell + style.cell / 2;
        let top = (style.margin - th) / 2;
        draw_text(&mut img, (centre - tw / 2) as i64, top as i64, &label, BLACK, 1);
        if tw + 2 <= style.margin {
            let left = (style.margin - tw) / 2;
            draw_text(&mut img, left as i64, (centre - th / 2) as i64, &label, BLACK, 1);
        }
    }
    Ok(img)
}

pub fn render_confusion(cm: &ConfusionMatrix, path: impl AsRef<Path>) -> Result<()> {
    render_confusion_with(cm, path, ConfusionStyle::default())
}

pub fn render_confusion_with(cm: &ConfusionMatrix, path: impl AsRef<Path>, style: ConfusionStyle) -> Result<()> {
    save_png(&confusion_image(cm, style)?, path.as_ref())
}

pub(crate) fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::Io(io),
        other => Error::Image(other),
    })
}

fn shade(share: f64) -> Rgb<u8> {
    let s = share.clamp(0.0, 1.0);
    let ch = |d: f64| (255.0 + s * (d - 255.0)).round() as u8;
    Rgb([ch(DARK[0]), ch(DARK[1]), ch(DARK[2])])
}
