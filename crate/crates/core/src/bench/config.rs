use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ridge::{default_lambda_grid, SolverForm};
use crate::scattering::{Channel, TmStorage, INPUT_PIXELS, SPECKLE_PIXELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Three-wavelength scattering, 3 × 6400 features.
    RssRc,
    /// Red (638 nm) scattering only, 6400 features.
    ScRc,
    /// Raw 48 × 48 × 3 pixels, 6912 features.
    RcRaw,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::RssRc, Scheme::ScRc, Scheme::RcRaw];

    pub fn channels(self) -> &'static [Channel] {
        match self {
            Scheme::RssRc => &Channel::ALL,
            Scheme::ScRc => &[Channel::R],
            Scheme::RcRaw => &[],
        }
    }

    pub fn feature_dim(self) -> usize {
        match self {
            Scheme::RcRaw => 3 * INPUT_PIXELS,
            s => s.channels().len() * SPECKLE_PIXELS,
        }
    }

    pub fn scatters(self) -> bool {
        self != Scheme::RcRaw
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::RssRc => "rss_rc",
            Scheme::ScRc => "sc_rc",
            Scheme::RcRaw => "rc_raw",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['+', '-'], "_").as_str() {
            "rss_rc" => Ok(Scheme::RssRc),
            "sc_rc" => Ok(Scheme::ScRc),
            "rc_raw" | "rc" => Ok(Scheme::RcRaw),
            _ => Err(Error::invalid(format!("unknown scheme '{s}' (expected rss_rc, sc_rc or rc_raw)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Idx,
    Folder,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idx" => Ok(DatasetFormat::Idx),
            "folder" => Ok(DatasetFormat::Folder),
            _ => Err(Error::invalid(format!("unknown dataset format '{s}' (expected idx or folder)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub format: DatasetFormat,
    /// IDX image file or a directory holding an IDX pair; the root of a
    /// class-per-folder tree otherwise.
    pub path: PathBuf,
    /// IDX label file, when `path` is an image file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    /// Fail on undecodable images instead of skipping them.
    #[serde(default)]
    pub strict: bool,
    /// Stratified subsample drawn afresh each repetition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_samples: Option<usize>,
}

impl DatasetSpec {
    pub fn idx(path: impl Into<PathBuf>) -> Self {
        Self {
            format: DatasetFormat::Idx,
            path: path.into(),
            labels: None,
            strict: false,
            max_samples: None,
        }
    }

    pub fn folder(path: impl Into<PathBuf>) -> Self {
        Self {
            format: DatasetFormat::Folder,
            ..Self::idx(path)
        }
    }
}

/// Fixed penalty, or selection over [`default_lambda_grid`]. Serialized as a
/// number or the string `"grid"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaPolicy {
    Fixed(f64),
    #[default]
    Grid,
}

impl LambdaPolicy {
    pub fn candidates(self) -> Vec<f64> {
        match self {
            LambdaPolicy::Fixed(l) => vec![l],
            LambdaPolicy::Grid => default_lambda_grid(),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("grid") {
            return Ok(LambdaPolicy::Grid);
        }
        match s.parse::<f64>() {
            Ok(l) if l >= 0.0 && l.is_finite() => Ok(LambdaPolicy::Fixed(l)),
            _ => Err(Error::invalid(format!("lambda must be a nonnegative number or 'grid', got '{s}'"))),
        }
    }
}

impl Serialize for LambdaPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaPolicy::Fixed(l) => s.serialize_f64(*l),
            LambdaPolicy::Grid => s.serialize_str("grid"),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n
                .as_f64()
                .filter(|l| *l >= 0.0)
                .map(LambdaPolicy::Fixed)
                .ok_or_else(|| D::Error::custom("lambda must be nonnegative")),
            serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
            other => Err(D::Error::custom(format!("expected a number or \"grid\", got {other}"))),
        }
    }
}

fn default_repetitions() -> usize {
    5
}

fn default_validation_fraction() -> f64 {
    0.1
}

/// One experiment: a dataset, a scheme and the protocol around them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub scheme: Scheme,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Repetition `r` splits with `split_seed + r`.
    #[serde(default)]
    pub split_seed: u64,
    /// Repetition `r` draws its medium with `medium_seed + r`.
    #[serde(default)]
    pub medium_seed: u64,
    #[serde(default)]
    pub lambda: LambdaPolicy,
    /// Share of the training split held out for λ selection.
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub quantize_bits: Option<u32>,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub solver_form: Option<SolverForm>,
    #[serde(default)]
    pub tm_storage: TmStorage,
    /// Directory reused across runs for `FSTR` feature files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec, scheme: Scheme) -> Self {
        Self {
            dataset,
            scheme,
            repetitions: default_repetitions(),
            split_seed: 0,
            medium_seed: 0,
            lambda: LambdaPolicy::Grid,
            validation_fraction: default_validation_fraction(),
            quantize_bits: None,
            standardize: false,
            solver_form: None,
            tm_storage: TmStorage::Cached,
            feature_cache: None,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if let LambdaPolicy::Fixed(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("lambda {l} must be finite and nonnegative")));
            }
        }
        if let Some(b) = self.quantize_bits {
            if !(1..=16).contains(&b) {
                return Err(Error::invalid(format!("quantize bits {b} outside [1, 16]")));
            }
        }
        if self.dataset.max_samples == Some(0) {
            return Err(Error::invalid("max_samples must be positive"));
        }
        Ok(())
    }
}
