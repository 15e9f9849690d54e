//! Scenario schema behavior: strict parsing, field-path validation messages,
//! and smoke runs of the lighter commands through the library API.

use std::io::Write;
use std::process::Command;

fn write_config(dir: &std::path::Path, name: &str, body: &str) -> std::path::PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(body.as_bytes()).unwrap();
    path
}

const MINIMAL: &str = r#"
name = "mini"

[mass]
kind = "linear_periodic"
l1 = 4.0
l2 = 4.0

[grid]
n1 = 128
n2 = 128

[solver]
eps = [0.25]
dt_factor = 0.1
t_end = 0.1
snapshot_stride = 2

[initial]
kind = "gaussian_edge"
s0 = 2.0
width = 1.0

[normal]
n_s = 128
n_y = 64

[extraction]
n_modes = 1
sigma_window = [-3.0, 3.0]
n_s = 32
n_sigma = 25

[transport]
dt = 1e-3
kde_bandwidth = [0.2, 0.3]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edgerun"))
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = std::env::temp_dir().join("edgerun_cfg_unknown");
    let bad = MINIMAL.replace("width = 1.0", "width = 1.0\nwdith_typo = 2.0");
    let path = write_config(&dir, "bad.toml", &bad);
    let out = bin()
        .args(["chart", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("wdith_typo") || msg.contains("unknown field"), "{msg}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn resolution_guard_names_the_field() {
    let dir = std::env::temp_dir().join("edgerun_cfg_res");
    // eps too small for the grid: dx > sqrt(eps)/4
    let bad = MINIMAL.replace("eps = [0.25]", "eps = [0.001]");
    let path = write_config(&dir, "bad.toml", &bad);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("sqrt(eps)/4"), "{msg}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn minimal_scenario_simulates_and_writes_manifest() {
    let dir = std::env::temp_dir().join("edgerun_cfg_smoke");
    std::fs::remove_dir_all(&dir).ok();
    let path = write_config(&dir, "mini.toml", MINIMAL);
    let out_dir = dir.join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest_path = out_dir.join("mini/eps_0.25/manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "mini");
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for entry in outputs {
        let rel = entry["path"].as_str().unwrap();
        let f = out_dir.join("mini/eps_0.25").join(rel);
        assert!(f.exists(), "missing {rel}");
        assert_eq!(entry["shape"].as_array().unwrap().len(), 3);
    }
    // rerun is bit-identical
    let first = std::fs::read(out_dir.join("mini/eps_0.25/snapshots/snap_0000.bin")).unwrap();
    let out2 = bin()
        .args(["simulate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out2.status.success());
    let second = std::fs::read(out_dir.join("mini/eps_0.25/snapshots/snap_0000.bin")).unwrap();
    assert_eq!(first, second);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn pipeline_report_schema() {
    let dir = std::env::temp_dir().join("edgerun_cfg_pipeline");
    std::fs::remove_dir_all(&dir).ok();
    let path = write_config(&dir, "mini.toml", MINIMAL);
    let out_dir = dir.join("out");
    let out = bin()
        .args(["pipeline", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("mini/report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["scenario"], "mini");
    let per_eps = report["per_eps"].as_array().unwrap();
    assert_eq!(per_eps.len(), 1);
    let r = &per_eps[0];
    assert!(r["ansatz_errors"].as_array().unwrap().len() >= 2);
    assert!(r["mass_accounting"].as_array().unwrap().len() >= 2);
    assert!(r["min_accounted_fraction"].as_f64().unwrap() > 0.9);
    // CSV twins exist
    for f in ["ansatz_errors.csv", "centroids.csv", "mass_accounting.csv"] {
        assert!(out_dir.join("mini/eps_0.25").join(f).exists());
    }
    std::fs::remove_dir_all(dir).ok();
}
