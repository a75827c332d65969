mod common;

use std::path::{Path, PathBuf};

use speckle_core::bench::{
    compare, confusion_image, regenerate_features, render_confusion, run, run_schemes, ConfusionStyle, DatasetSpec,
    ExperimentConfig, ExperimentReport, LambdaPolicy, Scheme,
};
use speckle_core::dataset::load_store;
use speckle_core::ridge::{default_lambda_grid, ConfusionMatrix};
use speckle_core::Error;

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a checked-in file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, got: &[u8]) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, got).unwrap();
    }
    let want = std::fs::read(&path).unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()));
    assert!(want == got, "{name} differs from the golden copy");
}

fn tiny_config(dir: &Path) -> ExperimentConfig {
    common::tiny_two_class(dir);
    let mut c = ExperimentConfig::new(DatasetSpec::idx(dir), Scheme::RssRc);
    c.repetitions = 2;
    c.split_seed = 3;
    c.medium_seed = 11;
    c
}

#[test]
fn tiny_experiment_is_deterministic_and_matches_golden() {
    let data = tempfile::tempdir().unwrap();
    let cfg = tiny_config(data.path());
    let a = run_schemes(&cfg, &Scheme::ALL).unwrap();
    let b = run_schemes(&cfg, &Scheme::ALL).unwrap();
    assert_eq!(a.len(), 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.without_timings(), y.without_timings());
        assert_eq!(x.repetitions.len(), 2);
        for r in &x.repetitions {
            assert_eq!((r.train_samples, r.test_samples), (34, 6));
            assert_eq!(r.confusion.total(), 6);
        }
    }
    let reports: Vec<ExperimentReport> = a.iter().map(|r| r.without_timings()).collect();
    let text = serde_json::to_string_pretty(&reports)
        .unwrap()
        .replace(&data.path().display().to_string(), "<data>");
    check_golden("tiny_reports.json", text.as_bytes());
}

#[test]
fn report_files_are_written() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(data.path());
    cfg.scheme = Scheme::RcRaw;
    cfg.out_dir = Some(out.path().to_path_buf());
    let report = run(&cfg).unwrap();
    for f in ["config.json", "report.json", "table.csv", "confusion.png", "rep_0/rc_raw.json", "rep_1/rc_raw.json"] {
        assert!(out.path().join(f).is_file(), "{f} missing");
    }
    assert_eq!(ExperimentReport::load(out.path().join("report.json")).unwrap(), report);
    let csv = std::fs::read_to_string(out.path().join("table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

/// Two classes far apart in every pixel: any penalty in the grid must
/// separate them perfectly.
#[test]
fn separable_data_is_perfect_across_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let images: Vec<Vec<u8>> = (0..30).map(|i| vec![if i % 2 == 0 { 20 + i as u8 } else { 220 - i as u8 }; 64]).collect();
    let labels: Vec<u8> = (0..30).map(|i| i % 2).collect();
    common::write_idx(dir.path(), 8, 8, &images, &labels);
    for lambda in default_lambda_grid() {
        let mut cfg = ExperimentConfig::new(DatasetSpec::idx(dir.path()), Scheme::RcRaw);
        cfg.repetitions = 1;
        cfg.lambda = LambdaPolicy::Fixed(lambda);
        let report = run(&cfg).unwrap();
        assert_eq!(report.mean_accuracy, 1.0, "lambda {lambda}");
    }
}

#[test]
fn comparison_contract() {
    let data = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(data.path());
    cfg.lambda = LambdaPolicy::Fixed(1.0);
    let reports = run_schemes(&cfg, &Scheme::ALL).unwrap();
    let table = compare(&reports).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.repetitions, 2);
    assert_eq!(table.rows[0].delta_vs_first, 0.0);
    for (row, r) in table.rows.iter().zip(&reports) {
        assert_eq!(row.scheme, r.scheme);
        assert_eq!(row.delta_vs_first, r.mean_accuracy - reports[0].mean_accuracy);
    }
    let same = compare(&[reports[1].clone(), reports[1].clone()]).unwrap();
    assert!(same.rows.iter().all(|r| r.delta_vs_first == 0.0));

    let csv = table.to_csv();
    assert!(csv.starts_with("scheme,mean,std,"));
    assert_eq!(csv.lines().count(), 4);

    let mut other = reports[0].clone();
    other.config.dataset.path = PathBuf::from("/elsewhere");
    assert!(matches!(compare(&[reports[0].clone(), other]), Err(Error::Validation(_))));
    let mut short = reports[0].clone();
    short.repetitions.pop();
    assert!(matches!(compare(&[reports[0].clone(), short]), Err(Error::Validation(_))));
    assert!(compare(&[]).is_err());

    let out = tempfile::tempdir().unwrap();
    table.write_files(out.path()).unwrap();
    let chart = image::open(out.path().join("comparison.png")).unwrap();
    assert_eq!((chart.width(), chart.height()), (480, 320));
}

#[test]
fn confusion_png_matches_golden() {
    let counts: Vec<Vec<u64>> = (0..10)
        .map(|i| (0..10).map(|j| if i == j { 90 + i as u64 } else { ((i * 3 + j * 7) % 5) as u64 }).collect())
        .collect();
    let cm = ConfusionMatrix::from_counts(counts).unwrap();
    let style = ConfusionStyle::default();
    let img = confusion_image(&cm, style).unwrap();
    assert_eq!(img.dimensions(), style.image_size(10));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cm.png");
    render_confusion(&cm, &path).unwrap();
    let decoded = image::open(&path).unwrap().to_rgb8();
    assert_eq!(decoded, img);
    let path = golden("confusion_10.png");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        img.save(&path).unwrap();
    }
    assert_eq!(image::open(&path).unwrap().to_rgb8(), img);
}

#[test]
fn cached_features_regenerate_bit_identically() {
    let data = tempfile::tempdir().unwrap();
    let cache = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(data.path());
    cfg.repetitions = 1;
    cfg.quantize_bits = Some(6);
    cfg.feature_cache = Some(cache.path().to_path_buf());
    let first = run_schemes(&cfg, &[Scheme::RssRc, Scheme::RcRaw]).unwrap();

    let mut files: Vec<PathBuf> = std::fs::read_dir(cache.path()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 4);
    for f in &files {
        let stored = load_store(f).unwrap();
        let again = regenerate_features(stored.provenance()).unwrap();
        assert_eq!(again, stored, "{}", f.display());
    }

    // A second run reads the cache and reproduces the results.
    let second = run_schemes(&cfg, &[Scheme::RssRc, Scheme::RcRaw]).unwrap();
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a.without_timings(), b.without_timings());
    }
}

#[test]
fn three_channel_features_cost_more_than_one() {
    let data = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(data.path());
    cfg.repetitions = 1;
    cfg.lambda = LambdaPolicy::Fixed(1.0);
    let reports = run_schemes(&cfg, &[Scheme::RssRc, Scheme::ScRc]).unwrap();
    let (rss, sc) = (&reports[0].mean_timings, &reports[1].mean_timings);
    assert!(rss.features_seconds >= sc.features_seconds, "rss {} s, sc {} s", rss.features_seconds, sc.features_seconds);
    assert_eq!(reports[0].feature_dim, 3 * reports[1].feature_dim);
}

#[test]
fn bad_configs_are_rejected() {
    let data = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(data.path());
    cfg.repetitions = 0;
    assert!(matches!(run(&cfg), Err(Error::InvalidArgument(_))));
    let mut cfg = tiny_config(data.path());
    cfg.dataset.path = data.path().join("missing");
    assert!(run(&cfg).is_err());
}
