use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wvdirect::analysis::CampaignEstimates;
use wvdirect::io::{read_json, scan_file_name, write_json, SCANS_DIR};
use wvdirect::qcore::{wrap_angle, Direction};
use wvdirect::report::ComparisonReport;
use wvdirect::sim::{ExperimentConfig, NoiseModel};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wvdirect"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("presets")
        .join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_presets_match_builtins() {
    let weak: ExperimentConfig = read_json(&preset("weak.json")).unwrap();
    let strong: ExperimentConfig = read_json(&preset("strong.json")).unwrap();
    assert_eq!(weak, ExperimentConfig::weak_preset());
    assert_eq!(strong, ExperimentConfig::strong_preset());
}

#[test]
fn oracle_balanced_state() {
    let o = run(&["oracle", "--theta", "90", "--phi", "90", "--alpha", "90"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let out = text(&o.stdout);
    assert!(out.contains("im = -1.000000000000"), "{out}");
    let residual: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("round-trip residual = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual < 1e-9);
}

#[test]
fn oracle_errors_are_validation_failures() {
    let o = run(&["oracle", "--phi", "180"]);
    assert_eq!(code(&o), 2);
    assert!(
        text(&o.stderr).contains("postselection"),
        "{}",
        text(&o.stderr)
    );

    let o = run(&["oracle", "--alpha", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("strength"), "{}", text(&o.stderr));

    let o = run(&["oracle", "--alpha", "ninety"]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("Usage"));
}

#[test]
fn simulate_missing_config_is_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--config",
        "/nonexistent/weak.json",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn simulate_lists_every_invalid_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        contrast: 1.5,
        time_per_point: -1.0,
        peak_rate: 0.0,
        ..ExperimentConfig::weak_preset()
    };
    let path = dir.path().join("bad.json");
    write_json(&path, &cfg).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        s(&path),
        "--out",
        s(&dir.path().join("c")),
    ]);
    assert_eq!(code(&o), 2);
    let err = text(&o.stderr);
    for field in ["contrast", "time_per_point", "peak_rate"] {
        assert!(err.contains(field), "{field} missing from {err}");
    }
}

#[test]
fn simulate_writes_grid_and_honours_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("weak");
    let o = run(&[
        "simulate",
        "--config",
        s(&preset("weak.json")),
        "--out",
        s(&out),
        "--seed",
        "9",
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let scans: Vec<_> = fs::read_dir(out.join(SCANS_DIR))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("phi"))
        .collect();
    assert_eq!(scans.len(), 13 * 6);
    let cfg: ExperimentConfig = read_json(&out.join("config.json")).unwrap();
    assert_eq!(cfg.rng_seed, 9);
    let manifest: serde_json::Value = read_json(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest["seed_override"], 9);
    assert_eq!(manifest["subcommand"], "simulate");
}

#[test]
fn extract_noiseless_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("quiet.json");
    write_json(
        &cfg_path,
        &ExperimentConfig {
            noise: NoiseModel::Noiseless,
            ..ExperimentConfig::strong_preset()
        },
    )
    .unwrap();
    let camp = dir.path().join("camp");
    assert_eq!(
        code(&run(&[
            "simulate",
            "--config",
            s(&cfg_path),
            "--out",
            s(&camp)
        ])),
        0
    );
    let est_dir = dir.path().join("est");
    let o = run(&["extract", s(&camp), "--out", s(&est_dir)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let est: CampaignEstimates = read_json(&est_dir.join("estimates.json")).unwrap();
    assert_eq!(est.points.len(), 13);
    for p in &est.points {
        assert!(wrap_angle(p.state.phi_m - p.phi_true).abs() < 1e-6);
    }

    let o = run(&[
        "extract",
        s(&camp),
        "--out",
        s(&est_dir),
        "--fusion",
        "modulus",
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let o = run(&["extract", s(&camp), "--fusion", "average"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn extract_names_missing_directions() {
    let dir = tempfile::tempdir().unwrap();
    let camp = dir.path().join("camp");
    assert_eq!(
        code(&run(&[
            "simulate",
            "--config",
            s(&preset("strong.json")),
            "--out",
            s(&camp)
        ])),
        0
    );
    for d in [Direction::YPlus, Direction::YMinus] {
        fs::remove_file(camp.join(SCANS_DIR).join(scan_file_name(5, d))).unwrap();
    }
    let o = run(&["extract", s(&camp)]);
    assert_eq!(code(&o), 2);
    let err = text(&o.stderr);
    assert!(err.contains("y+, y-"), "{err}");
}

fn simulated(dir: &Path, name: &str, preset_file: &str) -> PathBuf {
    let out = dir.join(name);
    let o = run(&[
        "simulate",
        "--config",
        s(&preset(preset_file)),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let o = run(&["extract", s(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    out
}

#[test]
fn compare_identical_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulated(dir.path(), "a", "strong.json");
    let out = dir.path().join("report");
    let o = run(&["compare", s(&a), s(&a), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("precision"));

    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    let rows: Vec<&str> = table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[5], "1");
        assert_eq!(cols[6], "1");
    }
    let report: ComparisonReport = read_json(&out.join("report.json")).unwrap();
    assert_eq!(report.flags.len(), 6);

    let o = run(&[
        "compare",
        s(&a),
        s(&a),
        "--out",
        s(&out),
        "--assert-strong-wins",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn compare_presets() {
    let dir = tempfile::tempdir().unwrap();
    let weak = simulated(dir.path(), "weak", "weak.json");
    let strong = simulated(dir.path(), "strong", "strong.json");
    let out = dir.path().join("report");
    let o = run(&["compare", s(&weak), s(&strong), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    for f in [
        "report.json",
        "table.csv",
        "state_points.csv",
        "fringes.csv",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: ComparisonReport = read_json(&out.join("report.json")).unwrap();
    // exit code under assertion mode mirrors the flags
    let o = run(&[
        "compare",
        s(&weak),
        s(&strong),
        "--out",
        s(&out),
        "--assert-strong-wins",
    ]);
    assert_eq!(code(&o), if report.flags.is_empty() { 0 } else { 3 });
}

#[test]
fn compare_grid_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let weak = simulated(dir.path(), "weak", "weak.json");
    let cfg_path = dir.path().join("short.json");
    let mut cfg = ExperimentConfig::strong_preset();
    cfg.phi_grid.truncate(7);
    write_json(&cfg_path, &cfg).unwrap();
    let strong = dir.path().join("strong");
    assert_eq!(
        code(&run(&[
            "simulate",
            "--config",
            s(&cfg_path),
            "--out",
            s(&strong)
        ])),
        0
    );
    let o = run(&[
        "compare",
        s(&weak),
        s(&strong),
        "--out",
        s(&dir.path().join("r")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("grid"), "{}", text(&o.stderr));
}
