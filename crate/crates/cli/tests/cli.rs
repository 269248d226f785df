use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stylfacts::series::{read_bars_csv, validate_and_gapfill, GapPolicy, SamplingGrid};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stylfacts"));
    c.env_remove("STYLFACTS_SEED");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn simulate_to(path: &Path, args: &[&str]) {
    let out = run(bin().arg("simulate").args(args).arg("--out").arg(path));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn summary_rows(dir: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(dir.join("summary.csv"))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn empty_asset_list_gives_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"grid_step_secs": 86400, "out_dir": "out"}"#);
    let out = run(bin().args(["analyze", "--config"]).arg(&cfg));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = summary_rows(&dir.path().join("out"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "asset");
    assert_eq!(rows[0].len(), 12);
}

#[test]
fn invalid_config_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"grid_step_secs": 86400, "assets": [{"id": "x", "path": "missing.csv"}]}"#,
    );
    let out = run(bin()
        .args(["analyze", "--out"])
        .arg(dir.path().join("o"))
        .arg("--config")
        .arg(&cfg));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
    let cfg = write_config(dir.path(), r#"{"grid_step_secs": 86400, "unknown_key": 1}"#);
    let out = run(bin()
        .args(["analyze", "--out"])
        .arg(dir.path().join("o"))
        .arg("--config")
        .arg(&cfg));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    simulate_to(&a, &["--model", "gbm", "--n", "1000", "--seed", "7"]);
    simulate_to(&b, &["--model", "gbm", "--n", "1000", "--seed", "7"]);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert!(bytes.starts_with(b"timestamp,open,high,low,close,volume\n"));
    let bars = read_bars_csv(bytes.as_slice()).unwrap();
    assert_eq!(bars.len(), 1001);
    let v = validate_and_gapfill(
        "a",
        bars,
        SamplingGrid::new(86_400).unwrap(),
        GapPolicy::DropAndReindex,
    )
    .unwrap();
    assert_eq!(v.gaps.gap_count, 0);

    let stdout = run(bin().args([
        "simulate", "--model", "gjr", "--n", "50", "--seed", "1", "--volume",
    ]));
    assert!(stdout.status.success());
    let bars = read_bars_csv(stdout.stdout.as_slice()).unwrap();
    assert!(bars.iter().all(|b| b.volume.is_some()));
}

#[test]
fn simulate_rejects_non_stationary_garch() {
    let out = run(bin().args([
        "simulate", "--model", "garch", "--alpha", "0.5", "--beta", "0.6", "--n", "100",
    ]));
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("stationary"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gbm_fixture_through_full_suite() {
    let dir = tempfile::tempdir().unwrap();
    simulate_to(
        &dir.path().join("gbm.csv"),
        &["--model", "gbm", "--n", "20000", "--seed", "3"],
    );
    std::fs::write(dir.path().join("broken.csv"), "date,price\n2020-01-01,1\n").unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"grid_step_secs": 86400, "seed": 11,
            "assets": [{"id": "gbm", "path": "gbm.csv"}, {"id": "broken", "path": "broken.csv"}]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(bin()
        .args(["analyze", "--workers", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir));
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let rows = summary_rows(&out_dir);
    assert_eq!(rows.len(), 3);
    let header = &rows[0];
    let gbm = rows.iter().find(|r| r[0] == "gbm").unwrap();
    let status = |fact: &str| gbm[header.iter().position(|h| h == fact).unwrap()].as_str();
    assert_eq!(status("F1"), "supported");
    for f in ["F2", "F4", "F5", "F11"] {
        assert_eq!(status(f), "not_supported", "{f}");
    }
    assert_eq!(status("F10"), "supported");
    let broken = rows.iter().find(|r| r[0] == "broken").unwrap();
    assert!(broken[1..].iter().all(|s| s == "skipped"));
    for row in &rows[1..] {
        for s in &row[1..] {
            assert!(["supported", "not_supported", "inconclusive", "skipped"].contains(&s.as_str()));
        }
    }

    let schema: serde_json::Value = serde_json::from_str(stylfacts_cli::REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    for id in ["gbm", "broken"] {
        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out_dir.join(id).join("report.json")).unwrap())
                .unwrap();
        let errors: Vec<String> = validator
            .iter_errors(&report)
            .map(|e| e.to_string())
            .collect();
        assert!(errors.is_empty(), "{id}: {errors:?}");
        for v in report["verdicts"].as_array().unwrap() {
            for c in v["curves"].as_array().unwrap() {
                assert!(out_dir.join(id).join(c.as_str().unwrap()).is_file());
            }
        }
    }
    assert!(out_dir.join("gbm/plots/F1_acf_returns.csv").is_file());
    assert!(out_dir.join("gbm/plots/volatility.csv").is_file());
    assert_eq!(
        std::fs::read_to_string(out_dir.join("report.schema.json")).unwrap(),
        stylfacts_cli::REPORT_SCHEMA
    );

    let summary = std::fs::read(out_dir.join("summary.csv")).unwrap();
    let merged = dir.path().join("merged.csv");
    let out = run(bin()
        .args(["report", "--merge"])
        .arg(&out_dir)
        .arg("--out")
        .arg(&merged));
    assert!(out.status.success());
    let merged = std::fs::read_to_string(merged).unwrap();
    let mut expect: Vec<&str> = std::str::from_utf8(&summary).unwrap().lines().collect();
    expect[1..].sort();
    assert_eq!(merged.lines().collect::<Vec<_>>(), expect);
}

#[test]
fn runs_are_byte_identical_and_seed_can_be_overridden() {
    let dir = tempfile::tempdir().unwrap();
    for (id, model) in [("g1", "garch"), ("g2", "gbm"), ("g3", "gjr")] {
        simulate_to(
            &dir.path().join(format!("{id}.csv")),
            &["--model", model, "--n", "3000", "--seed", "5", "--volume"],
        );
    }
    let cfg = write_config(
        dir.path(),
        r#"{"grid_step_secs": 86400, "seed": 4, "facts": ["F1", "F4", "F6", "F10", "F11"],
            "params": {"f11": {"resamples": 200}},
            "assets": [{"id": "g1", "path": "g1.csv"}, {"id": "g2", "path": "g2.csv"}, {"id": "g3", "path": "g3.csv"}]}"#,
    );
    let mut snaps = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let out_dir = dir.path().join(name);
        let out = run(bin()
            .args(["analyze", "--workers", workers, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir));
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        snaps.push(snapshot(&out_dir));
    }
    assert!(snaps[0].len() > 10);
    assert_eq!(snaps[0], snaps[1]);
    assert_eq!(snaps[0], snaps[2]);

    let out_dir = dir.path().join("seeded");
    let out = run(bin()
        .env("STYLFACTS_SEED", "99")
        .args(["analyze", "--asset", "g1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir));
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("g1/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["master_seed"], 99);
    assert!(!out_dir.join("g2").exists());
    assert_eq!(summary_rows(&out_dir).len(), 2);
}
