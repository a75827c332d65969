//! Repeated experiments over the three feature schemes, with report files.
//!
//! Repetition `r` uses `split_seed + r` and `medium_seed + r`. When several
//! schemes run together they share the loaded dataset and each repetition's
//! split. Repetitions run one after another; the linear algebra inside each
//! is already parallel.
//!
//! An experiment directory holds `config.json`, `report.json`, `table.csv`
//! and `confusion.png`, plus `rep_<r>/<scheme>.json` written as each
//! repetition finishes. A failed run leaves `partial.json` behind.

mod compare;
mod config;
mod features;
mod font;
mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use compare::{compare, ComparisonRow, ComparisonTable};
pub use config::{DatasetFormat, DatasetSpec, ExperimentConfig, LambdaPolicy, Scheme};
pub use features::{build_features, load_dataset, medium_for, regenerate_features, repetition_data};
pub use render::{confusion_image, render_confusion, render_confusion_with, ConfusionStyle};

use crate::dataset::{DatasetSplit, RawDataset};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::ridge::{evaluate, fit, fit_with_validation, ConfusionMatrix, FitOptions, LambdaSearch, SolverForm};
use crate::scattering::Medium;

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub features_seconds: f64,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
}

impl Timings {
    fn mean(all: &[Timings]) -> Timings {
        let n = all.len().max(1) as f64;
        Timings {
            features_seconds: all.iter().map(|t| t.features_seconds).sum::<f64>() / n,
            fit_seconds: all.iter().map(|t| t.fit_seconds).sum::<f64>() / n,
            predict_seconds: all.iter().map(|t| t.predict_seconds).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub index: usize,
    pub split_seed: u64,
    /// Absent for the raw-pixel scheme.
    pub medium_seed: Option<u64>,
    pub train_samples: usize,
    pub test_samples: usize,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_search: Option<LambdaSearch>,
    pub solver_form: SolverForm,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub scheme: Scheme,
    pub feature_dim: usize,
    pub class_names: Vec<String>,
    pub repetitions: Vec<RepetitionResult>,
    pub mean_accuracy: f64,
    /// Sample standard deviation; zero for a single repetition.
    pub std_accuracy: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    /// Confusion matrix of the last repetition.
    pub confusion: ConfusionMatrix,
    pub mean_timings: Timings,
}

impl ExperimentReport {
    fn assemble(config: &ExperimentConfig, scheme: Scheme, class_names: Vec<String>, reps: Vec<RepetitionResult>) -> Result<Self> {
        let last = reps.last().ok_or_else(|| Error::invalid("a report needs at least one repetition"))?;
        let acc: Vec<f64> = reps.iter().map(|r| r.accuracy).collect();
        let n = acc.len() as f64;
        let mean = acc.iter().sum::<f64>() / n;
        let std = if acc.len() > 1 {
            (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let timings: Vec<Timings> = reps.iter().map(|r| r.timings).collect();
        Ok(Self {
            config: ExperimentConfig {
                scheme,
                ..config.clone()
            },
            scheme,
            feature_dim: scheme.feature_dim(),
            class_names,
            confusion: last.confusion.clone(),
            mean_accuracy: mean,
            std_accuracy: std,
            min_accuracy: acc.iter().copied().fold(f64::INFINITY, f64::min),
            max_accuracy: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_timings: Timings::mean(&timings),
            repetitions: reps,
        })
    }

    /// Copy with every timing zeroed, for run-to-run comparison.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.mean_timings = Timings::default();
        r.repetitions.iter_mut().for_each(|rep| rep.timings = Timings::default());
        r
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    /// One row per repetition, then a `mean` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("repetition,split_seed,medium_seed,lambda,accuracy,features_seconds,fit_seconds,predict_seconds\n");
        for r in &self.repetitions {
            s += &format!(
                "{},{},{},{},{},{:.3},{:.3},{:.3}\n",
                r.index,
                r.split_seed,
                r.medium_seed.map(|m| m.to_string()).unwrap_or_default(),
                r.lambda,
                r.accuracy,
                r.timings.features_seconds,
                r.timings.fit_seconds,
                r.timings.predict_seconds
            );
        }
        let t = &self.mean_timings;
        s += &format!(
            "mean,,,,{},{:.3},{:.3},{:.3}\n",
            self.mean_accuracy, t.features_seconds, t.fit_seconds, t.predict_seconds
        );
        s
    }

    /// Writes `config.json`, `report.json`, `table.csv` and `confusion.png`.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_json(&dir.join("config.json"), &self.config)?;
        write_json(&dir.join("report.json"), self)?;
        fs::write(dir.join("table.csv"), self.to_csv())?;
        render_confusion(&self.confusion, dir.join("confusion.png"))
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(run_schemes(config, &[config.scheme])?.remove(0))
}

/// Runs several schemes on identical splits. `config.scheme` is ignored.
///
/// With one scheme, files go to `config.out_dir`; otherwise to
/// `config.out_dir/<scheme>`.
pub fn run_schemes(config: &ExperimentConfig, schemes: &[Scheme]) -> Result<Vec<ExperimentReport>> {
    config.validate()?;
    let mut unique: Vec<Scheme> = Vec::new();
    for &s in schemes {
        if !unique.contains(&s) {
            unique.push(s);
        }
    }
    if unique.is_empty() {
        return Err(Error::invalid("no scheme selected"));
    }
    let dirs: Vec<Option<PathBuf>> = unique
        .iter()
        .map(|s| match &config.out_dir {
            Some(d) if unique.len() > 1 => Some(d.join(s.as_str())),
            Some(d) => Some(d.clone()),
            None => None,
        })
        .collect();
    for (dir, &scheme) in dirs.iter().zip(&unique) {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
            write_json(&d.join("config.json"), &ExperimentConfig { scheme, ..config.clone() })?;
        }
    }

    let dataset = load_dataset(&config.dataset)?;
    log::info!("loaded {} samples in {} classes", dataset.len(), dataset.classes());
    let mut results: Vec<Vec<RepetitionResult>> = vec![Vec::new(); unique.len()];
    for r in 0..config.repetitions {
        let split_seed = config.split_seed.wrapping_add(r as u64);
        let medium_seed = config.medium_seed.wrapping_add(r as u64);
        let outcome = repetition_data(&dataset, &config.dataset, split_seed).and_then(|(data, split)| {
            for (i, &scheme) in unique.iter().enumerate() {
                let res = run_repetition(config, scheme, &data, &split, r, medium_seed)?;
                log::info!("{scheme} repetition {r}: accuracy {:.4} at lambda {}", res.accuracy, res.lambda);
                if let Some(d) = &dirs[i] {
                    let rep_dir = d.join(format!("rep_{r}"));
                    fs::create_dir_all(&rep_dir)?;
                    write_json(&rep_dir.join(format!("{scheme}.json")), &res)?;
                }
                results[i].push(res);
            }
            Ok(())
        });
        if let Err(e) = outcome {
            for (d, done) in dirs.iter().zip(&results) {
                if let Some(d) = d {
                    let _ = write_json(&d.join("partial.json"), done);
                }
            }
            return Err(Error::Repetition {
                index: r,
                source: Box::new(e),
            });
        }
    }

    let mut reports = Vec::with_capacity(unique.len());
    for ((scheme, reps), dir) in unique.iter().zip(results).zip(&dirs) {
        let report = ExperimentReport::assemble(config, *scheme, dataset.class_names().to_vec(), reps)?;
        if let Some(d) = dir {
            report.write_files(d)?;
        }
        reports.push(report);
    }
    Ok(reports)
}

fn run_repetition(
    config: &ExperimentConfig,
    scheme: Scheme,
    data: &RawDataset,
    split: &DatasetSplit,
    index: usize,
    medium_seed: u64,
) -> Result<RepetitionResult> {
    let t0 = Instant::now();
    let mut medium: Option<Medium> = None;
    let mut part = |name: &str, indices: &[usize]| -> Result<FeatureMatrix<f32>> {
        let prov = features::provenance(&config.dataset, scheme, split.split_seed, medium_seed, name, config.quantize_bits)?;
        if let Some(dir) = &config.feature_cache {
            if let Some(x) = features::cached(dir, &prov) {
                log::info!("reusing cached {scheme} {name} features");
                return Ok(x);
            }
        }
        if scheme.scatters() && medium.is_none() {
            medium = medium_for(scheme, medium_seed, config.tm_storage)?;
        }
        let x = build_features(data, indices, scheme, medium.as_ref(), config.quantize_bits)?;
        match &config.feature_cache {
            Some(dir) => {
                let labels: Vec<usize> = indices.iter().map(|&i| data.labels()[i]).collect();
                features::store_cache(dir, x, &labels, &prov)
            }
            None => Ok(x),
        }
    };
    let train_x = part("train", &split.train)?;
    let test_x = part("test", &split.test)?;
    drop(medium);
    let features_seconds = t0.elapsed().as_secs_f64();

    let train_y: Vec<usize> = split.train.iter().map(|&i| data.labels()[i]).collect();
    let test_y: Vec<usize> = split.test.iter().map(|&i| data.labels()[i]).collect();
    let options = FitOptions {
        solver_form: config.solver_form,
        standardize: config.standardize,
    };
    let t1 = Instant::now();
    let (model, search) = match config.lambda {
        LambdaPolicy::Fixed(l) => (fit(&train_x, &train_y, l, data.label_set(), options)?, None),
        LambdaPolicy::Grid => {
            let n = train_x.rows();
            if n < 2 {
                return Err(Error::validation("too few training samples for a validation slice"));
            }
            let n_val = ((n as f64 * config.validation_fraction).round() as usize).clamp(1, n - 1);
            let (m, s) = fit_with_validation(&train_x, &train_y, n_val, &LambdaPolicy::Grid.candidates(), data.label_set(), options)?;
            (m, Some(s))
        }
    };
    let fit_seconds = t1.elapsed().as_secs_f64();
    drop(train_x);

    let t2 = Instant::now();
    let (accuracy, confusion) = evaluate(&model, &test_x, &test_y)?;
    let predict_seconds = t2.elapsed().as_secs_f64();

    Ok(RepetitionResult {
        index,
        split_seed: split.split_seed,
        medium_seed: scheme.scatters().then_some(medium_seed),
        train_samples: split.train.len(),
        test_samples: split.test.len(),
        lambda: model.lambda(),
        lambda_search: search,
        solver_form: model.solver_form(),
        accuracy,
        confusion,
        timings: Timings {
            features_seconds,
            fit_seconds,
            predict_seconds,
        },
    })
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
