use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::config::Scheme;
use super::font::{draw_text, text_height, text_width};
use super::render::save_png;
use super::{write_json, ExperimentReport};
use crate::error::{Error, Result};

const CHART_W: u32 = 480;
const CHART_H: u32 = 320;
const BAR: [Rgb<u8>; 3] = [Rgb([31, 119, 180]), Rgb([255, 127, 14]), Rgb([44, 160, 44])];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scheme: Scheme,
    pub mean: f64,
    pub std: f64,
    pub features_seconds: f64,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
    /// `mean` minus the first row's mean.
    pub delta_vs_first: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub dataset: String,
    pub repetitions: usize,
    pub rows: Vec<ComparisonRow>,
}

/// Side-by-side scheme accuracies. Reports must share the dataset and the
/// repetition count.
pub fn compare(reports: &[ExperimentReport]) -> Result<ComparisonTable> {
    let first = reports.first().ok_or_else(|| Error::invalid("nothing to compare"))?;
    for r in &reports[1..] {
        if r.config.dataset != first.config.dataset {
            return Err(Error::validation(format!(
                "reports use different datasets: {} vs {}",
                first.config.dataset.path.display(),
                r.config.dataset.path.display()
            )));
        }
        if r.repetitions.len() != first.repetitions.len() {
            return Err(Error::validation(format!(
                "reports ran {} and {} repetitions",
                first.repetitions.len(),
                r.repetitions.len()
            )));
        }
    }
    let rows = reports
        .iter()
        .map(|r| ComparisonRow {
            scheme: r.scheme,
            mean: r.mean_accuracy,
            std: r.std_accuracy,
            features_seconds: r.mean_timings.features_seconds,
            fit_seconds: r.mean_timings.fit_seconds,
            predict_seconds: r.mean_timings.predict_seconds,
            delta_vs_first: r.mean_accuracy - first.mean_accuracy,
        })
        .collect();
    Ok(ComparisonTable {
        dataset: first.config.dataset.path.display().to_string(),
        repetitions: first.repetitions.len(),
        rows,
    })
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme,mean,std,fit_seconds,features_seconds,predict_seconds,delta_vs_first\n");
        for r in &self.rows {
            s += &format!(
                "{},{},{},{:.3},{:.3},{:.3},{}\n",
                r.scheme, r.mean, r.std, r.fit_seconds, r.features_seconds, r.predict_seconds, r.delta_vs_first
            );
        }
        s
    }

    /// Bar chart of mean accuracy with ±std whiskers on a 0..1 axis.
    pub fn chart(&self) -> RgbImage {
        let mut img = RgbImage::from_pixel(CHART_W, CHART_H, Rgb([255, 255, 255]));
        let black = Rgb([0, 0, 0]);
        let (left, right, top, bottom) = (40u32, 16u32, 24u32, 40u32);
        let plot_h = CHART_H - top - bottom;
        let base = CHART_H - bottom;
        let y_of = |v: f64| base - (v.clamp(0.0, 1.0) * plot_h as f64).round() as u32;

        for tick in 0..=4 {
            let v = tick as f64 / 4.0;
            let y = y_of(v);
            for x in left - 3..CHART_W - right {
                if x < left || x % 4 == 0 {
                    img.put_pixel(x, y, if x < left { black } else { Rgb([200, 200, 200]) });
                }
            }
            let label = format!("{v:.2}");
            let tw = text_width(&label, 1);
            draw_text(&mut img, (left - 5 - tw) as i64, y as i64 - 3, &label, black, 1);
        }
        for y in top..=base {
            img.put_pixel(left, y, black);
        }

        let n = self.rows.len().max(1) as u32;
        let slot = (CHART_W - left - right) / n;
        let bar_w = slot * 3 / 5;
        for (i, r) in self.rows.iter().enumerate() {
            let x0 = left + i as u32 * slot + (slot - bar_w) / 2;
            let y_top = y_of(r.mean);
            for x in x0..x0 + bar_w {
                for y in y_top..base {
                    img.put_pixel(x, y, BAR[i % BAR.len()]);
                }
            }
            let cx = x0 + bar_w / 2;
            let (hi, lo) = (y_of(r.mean + r.std), y_of(r.mean - r.std));
            for y in hi..=lo {
                img.put_pixel(cx, y, black);
            }
            for x in cx.saturating_sub(4)..=cx + 4 {
                img.put_pixel(x, hi, black);
                img.put_pixel(x, lo, black);
            }
            let value = format!("{:.3}", r.mean);
            let vw = text_width(&value, 1);
            draw_text(&mut img, cx as i64 - vw as i64 / 2, hi as i64 - text_height(1) as i64 - 3, &value, black, 1);
            let name = r.scheme.as_str();
            let nw = text_width(name, 1);
            draw_text(&mut img, cx as i64 - nw as i64 / 2, base as i64 + 8, name, black, 1);
        }
        img
    }

    /// Writes `comparison.csv`, `comparison.json` and `comparison.png`.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("comparison.csv"), self.to_csv())?;
        write_json(&dir.join("comparison.json"), self)?;
        save_png(&self.chart(), &dir.join("comparison.png"))
    }
}
