use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speckle-bench"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// 24 images of 6 × 6: even samples dark, odd samples bright.
fn tiny_idx(dir: &Path) {
    let n = 24u32;
    let mut img = Vec::new();
    for v in [0x0803u32, n, 6, 6] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    let mut lab = Vec::new();
    for v in [0x0801u32, n] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    for i in 0..n as u8 {
        let base = if i % 2 == 0 { 30 } else { 200 };
        img.extend((0..36u8).map(|p| base + (p * 3 + i) % 40));
        lab.push(i % 2);
    }
    std::fs::write(dir.join("train-images-idx3-ubyte"), img).unwrap();
    std::fs::write(dir.join("train-labels-idx1-ubyte"), lab).unwrap();
}

#[test]
fn run_writes_reports_and_compare_reads_them() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    tiny_idx(data.path());
    let o = bench(&[
        "run",
        "--dataset",
        data.path().to_str().unwrap(),
        "--scheme",
        "sc_rc,rc_raw",
        "--reps",
        "2",
        "--seed",
        "4",
        "--quantize-bits",
        "8",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["comparison.csv", "comparison.png", "sc_rc/report.json", "rc_raw/confusion.png"] {
        assert!(out.path().join(f).is_file(), "{f} missing");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("sc_rc") && stdout.contains("rc_raw"));

    let o = bench(&["compare", out.path().join("sc_rc").to_str().unwrap(), out.path().join("rc_raw/report.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8_lossy(&o.stdout);
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("sc_rc,"));
}

#[test]
fn config_file_mirrors_flags() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    tiny_idx(data.path());
    let cfg = data.path().join("run.json");
    let json = serde_json::json!({
        "dataset": data.path(),
        "format": "idx",
        "scheme": "rc_raw",
        "reps": 1,
        "lambda": 0.5,
        "out": out.path(),
    });
    std::fs::write(&cfg, json.to_string()).unwrap();
    let o = bench(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["repetitions"][0]["lambda"], 0.5);

    // Flags win over the file.
    let o = bench(&["run", "--config", cfg.to_str().unwrap(), "--lambda", "2"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["repetitions"][0]["lambda"], 2.0);

    std::fs::write(&cfg, r#"{"dataset": "x", "colour": 1}"#).unwrap();
    assert_eq!(code(&bench(&["run", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn exit_codes_follow_error_category() {
    let data = tempfile::tempdir().unwrap();
    tiny_idx(data.path());
    let d = data.path().to_str().unwrap();

    assert_eq!(code(&bench(&["run", "--dataset", d, "--scheme", "bogus"])), 2);
    assert_eq!(code(&bench(&["run", "--dataset", d, "--reps", "0"])), 2);
    assert_eq!(code(&bench(&["run", "--dataset", d, "--lambda", "-1"])), 2);
    assert_eq!(code(&bench(&["run"])), 2);
    assert_eq!(code(&bench(&["frobnicate"])), 2);

    let missing = data.path().join("missing");
    assert_eq!(code(&bench(&["run", "--dataset", missing.to_str().unwrap()])), 5);

    let broken = tempfile::tempdir().unwrap();
    std::fs::write(broken.path().join("train-images-idx3-ubyte"), [0u8, 0, 8, 3, 0]).unwrap();
    std::fs::write(broken.path().join("train-labels-idx1-ubyte"), [0u8, 0, 8, 1, 0, 0, 0, 0]).unwrap();
    let o = bench(&["run", "--dataset", broken.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error [format]"));

    let json = data.path().join("not_a_report.json");
    std::fs::write(&json, "[1, 2]").unwrap();
    assert_eq!(code(&bench(&["compare", json.to_str().unwrap()])), 3);
}

#[test]
fn inspect_tm_prints_stats_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.sptm");
    let o = bench(&["inspect-tm", "--seed", "3", "--channel", "g", "--m-in", "64", "--n-out", "100", "--save", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = String::from_utf8_lossy(&o.stdout).to_string();
    assert!(first.contains("520 nm"));
    assert!(first.contains("100 outputs × 64 inputs"));

    let o = bench(&["inspect-tm", "--file", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let second = String::from_utf8_lossy(&o.stdout);
    // Same statistics, minus the "saved to" line.
    assert_eq!(first.lines().take(8).collect::<Vec<_>>(), second.lines().take(8).collect::<Vec<_>>());

    std::fs::write(&file, b"SPTMxx").unwrap();
    assert_eq!(code(&bench(&["inspect-tm", "--file", file.to_str().unwrap()])), 3);
}
