use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use speckle_core::bench::{compare, run_schemes, DatasetFormat, DatasetSpec, ExperimentConfig, ExperimentReport, LambdaPolicy, Scheme};
use speckle_core::error::ErrorCategory;
use speckle_core::scattering::format::{load_tm, save_tm};
use speckle_core::scattering::{Channel, TmStorage, TransmissionMatrix, INPUT_PIXELS, SPECKLE_PIXELS};
use speckle_core::Error;

#[derive(Parser)]
#[command(name = "speckle-bench", version, about = "Speckle random-feature ridge classification benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report directory.
    Run(RunArgs),
    /// Tabulate several report.json files side by side.
    Compare(CompareArgs),
    /// Generate or load a transmission matrix and print its statistics.
    InspectTm(InspectArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with any of the flags below as keys; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// IDX label file when --dataset names an image file.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_parser = ["idx", "folder"])]
    format: Option<String>,
    /// rss_rc, sc_rc or rc_raw; repeat or comma-separate to share splits.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed for both the split and the medium.
    #[arg(long)]
    seed: Option<u64>,
    /// A nonnegative number or `grid`.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    quantize_bits: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stratified subsample size per repetition.
    #[arg(long)]
    max_samples: Option<usize>,
    #[arg(long)]
    standardize: bool,
    /// Fail on undecodable images.
    #[arg(long)]
    strict: bool,
    /// Regenerate transmission matrices block by block instead of caching them.
    #[arg(long)]
    on_the_fly: bool,
    /// Directory for reusable FSTR feature files.
    #[arg(long)]
    feature_cache: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// report.json files, or experiment directories holding one.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Read an SPTM file instead of generating.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "r")]
    channel: String,
    #[arg(long, default_value_t = INPUT_PIXELS)]
    m_in: usize,
    #[arg(long, default_value_t = SPECKLE_PIXELS)]
    n_out: usize,
    /// Write the matrix as SPTM.
    #[arg(long)]
    save: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::InspectTm(a) => cmd_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, name) = match e.category() {
                ErrorCategory::Argument => (2, "argument"),
                ErrorCategory::Format => (3, "format"),
                ErrorCategory::Numerical => (4, "numerical"),
                ErrorCategory::Io => (5, "io"),
            };
            eprintln!("error [{name}]: {e}");
            ExitCode::from(code)
        }
    }
}

/// Merges the optional config file with command-line flags into the flat
/// key space the config file uses.
fn merged_flags(a: &RunArgs) -> Result<Map<String, Value>, Error> {
    let mut m = match &a.config {
        Some(p) => match serde_json::from_slice::<Value>(&fs::read(p)?)? {
            Value::Object(m) => m,
            _ => return Err(Error::InvalidArgument(format!("{} must hold a JSON object", p.display()))),
        },
        None => Map::new(),
    };
    let mut set = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    set("dataset", a.dataset.as_ref().map(|p| json!(p)));
    set("labels", a.labels.as_ref().map(|p| json!(p)));
    set("format", a.format.as_ref().map(|f| json!(f)));
    set("scheme", (!a.scheme.is_empty()).then(|| json!(a.scheme)));
    set("reps", a.reps.map(|r| json!(r)));
    set("seed", a.seed.map(|s| json!(s)));
    set("lambda", a.lambda.as_ref().map(|l| json!(l)));
    set("quantize_bits", a.quantize_bits.map(|b| json!(b)));
    set("out", a.out.as_ref().map(|p| json!(p)));
    set("max_samples", a.max_samples.map(|n| json!(n)));
    set("feature_cache", a.feature_cache.as_ref().map(|p| json!(p)));
    set("standardize", a.standardize.then_some(json!(true)));
    set("strict", a.strict.then_some(json!(true)));
    set("on_the_fly", a.on_the_fly.then_some(json!(true)));
    Ok(m)
}

fn experiment(m: &Map<String, Value>) -> Result<(ExperimentConfig, Vec<Scheme>), Error> {
    let bad = |k: &str| Error::InvalidArgument(format!("config key '{k}' has the wrong type"));
    let str_of = |k: &str| -> Result<Option<String>, Error> {
        match m.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            _ => Err(bad(k)),
        }
    };
    let u64_of = |k: &str| -> Result<Option<u64>, Error> {
        match m.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v.as_u64().map(Some).ok_or_else(|| bad(k)),
        }
    };
    let bool_of = |k: &str| -> Result<bool, Error> {
        match m.get(k) {
            None | Some(Value::Null) => Ok(false),
            Some(v) => v.as_bool().ok_or_else(|| bad(k)),
        }
    };
    for k in m.keys() {
        const KNOWN: [&str; 14] = [
            "dataset", "labels", "format", "scheme", "reps", "seed", "lambda", "quantize_bits", "out", "max_samples",
            "feature_cache", "standardize", "strict", "on_the_fly",
        ];
        if !KNOWN.contains(&k.as_str()) {
            return Err(Error::InvalidArgument(format!("unknown config key '{k}'")));
        }
    }

    let path = str_of("dataset")?.ok_or_else(|| Error::InvalidArgument("--dataset is required".into()))?;
    let format: DatasetFormat = str_of("format")?.as_deref().unwrap_or("idx").parse()?;
    let schemes: Vec<Scheme> = match m.get("scheme") {
        None | Some(Value::Null) => vec![Scheme::RssRc],
        Some(Value::String(s)) => s.split(',').map(str::parse).collect::<Result<_, _>>()?,
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_str().ok_or_else(|| bad("scheme"))?.parse())
            .collect::<Result<_, _>>()?,
        _ => return Err(bad("scheme")),
    };
    let mut dataset = DatasetSpec {
        format,
        path: path.into(),
        labels: str_of("labels")?.map(PathBuf::from),
        strict: bool_of("strict")?,
        max_samples: u64_of("max_samples")?.map(|n| n as usize),
    };
    if dataset.format == DatasetFormat::Folder && dataset.labels.is_some() {
        dataset.labels = None;
        log::warn!("ignoring labels path for a folder dataset");
    }
    let mut cfg = ExperimentConfig::new(dataset, schemes[0]);
    if let Some(r) = u64_of("reps")? {
        cfg.repetitions = r as usize;
    }
    if let Some(s) = u64_of("seed")? {
        cfg.split_seed = s;
        cfg.medium_seed = s;
    }
    if let Some(l) = str_of("lambda")? {
        cfg.lambda = l.parse::<LambdaPolicy>()?;
    }
    cfg.quantize_bits = u64_of("quantize_bits")?.map(|b| b as u32);
    cfg.standardize = bool_of("standardize")?;
    if bool_of("on_the_fly")? {
        cfg.tm_storage = TmStorage::OnTheFly;
    }
    cfg.out_dir = str_of("out")?.map(PathBuf::from);
    cfg.feature_cache = str_of("feature_cache")?.map(PathBuf::from);
    cfg.validate()?;
    Ok((cfg, schemes))
}

fn cmd_run(a: RunArgs) -> Result<(), Error> {
    let (cfg, schemes) = experiment(&merged_flags(&a)?)?;
    let reports = run_schemes(&cfg, &schemes)?;
    for r in &reports {
        println!(
            "{:<7} accuracy {:.4} ± {:.4} over {} repetition(s)  features {:.1}s  fit {:.1}s  predict {:.2}s",
            r.scheme.as_str(),
            r.mean_accuracy,
            r.std_accuracy,
            r.repetitions.len(),
            r.mean_timings.features_seconds,
            r.mean_timings.fit_seconds,
            r.mean_timings.predict_seconds
        );
    }
    if reports.len() > 1 {
        let table = compare(&reports)?;
        if let Some(out) = &cfg.out_dir {
            table.write_files(out)?;
        }
    }
    if let Some(out) = &cfg.out_dir {
        println!("reports written to {}", out.display());
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<(), Error> {
    let reports = a
        .reports
        .iter()
        .map(|p| ExperimentReport::load(report_path(p)))
        .collect::<Result<Vec<_>, _>>()?;
    let table = compare(&reports)?;
    print!("{}", table.to_csv());
    if let Some(out) = &a.out {
        table.write_files(out)?;
    }
    Ok(())
}

fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("report.json")
    } else {
        p.to_path_buf()
    }
}

fn cmd_inspect(a: InspectArgs) -> Result<(), Error> {
    let tm = match &a.file {
        Some(p) => load_tm(p)?,
        None => TransmissionMatrix::generate(a.m_in, a.n_out, a.seed, a.channel.parse::<Channel>()?)?,
    };
    let (mut sum, mut sum_sq, mut max) = (0.0f64, 0.0f64, 0.0f64);
    let (mut sum_re, mut sum_im) = (0.0f64, 0.0f64);
    for n in 0..tm.n_out() {
        for m in 0..tm.m_in() {
            let e = tm.entry(n, m);
            let p = e.norm_sqr();
            sum += p;
            sum_sq += p * p;
            max = max.max(p);
            sum_re += e.re;
            sum_im += e.im;
        }
    }
    let count = (tm.n_out() * tm.m_in()) as f64;
    let psf0: f64 = tm.psf(0)?.iter().map(|c| c.norm_sqr()).sum();
    println!("channel       {} ({} nm)", tm.channel(), tm.channel().wavelength_nm());
    println!("seed          {}", tm.seed());
    println!("shape         {} outputs × {} inputs", tm.n_out(), tm.m_in());
    println!("mean |t|^2    {:.6e}  (expected {:.6e})", sum / count, 1.0 / tm.m_in() as f64);
    println!("var |t|^2     {:.6e}", sum_sq / count - (sum / count).powi(2));
    println!("max |t|^2     {:.6e}", max);
    println!("mean t        {:+.3e}{:+.3e}i", sum_re / count, sum_im / count);
    println!("psf(0) energy {:.6}  (expected {:.6})", psf0, tm.n_out() as f64 / tm.m_in() as f64);
    if let Some(p) = &a.save {
        save_tm(&tm, p)?;
        println!("saved to {}", p.display());
    }
    Ok(())
}

