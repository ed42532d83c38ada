//! End-to-end checks of the command-line binary.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nematic-blowup"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().parse().unwrap()).collect()
}

#[test]
fn static_profile_stays_put() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(config("static.toml"))
        .arg("--out")
        .arg(out.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["summary"]["stop_reason"], "t_end");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let csv = fs::read_to_string(out.path().join("timeseries.csv")).unwrap();
    let excess = column(&csv, "energy_excess");
    assert!(excess.len() > 10);
    assert!(excess.iter().all(|e| e.abs() <= 1e-6), "{excess:?}");
}

#[test]
fn missing_dt_is_reported_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("static.toml")).unwrap();
    let broken: String = text.lines().filter(|l| !l.starts_with("dt")).map(|l| format!("{l}\n")).collect();
    let path = dir.path().join("broken.toml");
    fs::write(&path, broken).unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dt"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("static.toml")).unwrap().replace("[scheme]", "[scheme]\ndtt = 1.0");
    let path = dir.path().join("typo.toml");
    fs::write(&path, text).unwrap();
    let out = bin().args(["verify", "--config"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dtt"));
}

#[test]
fn verify_passes_on_the_shipped_config() {
    let out = bin().args(["verify", "--config"]).arg(config("static.toml")).env("RUST_LOG", "warn").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("0 failed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn identical_configs_give_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let text = fs::read_to_string(config("static.toml")).unwrap().replace("t_end = 0.1", "t_end = 0.01");
        let path = d.path().join("c.toml");
        fs::write(&path, text).unwrap();
        let ok = bin().args(["run", "--config"]).arg(&path).arg("--out").arg(d.path().join("o")).env("RUST_LOG", "warn").output().unwrap();
        assert!(ok.status.success());
    }
    for f in ["timeseries.csv", "manifest.json"] {
        assert_eq!(fs::read(a.path().join("o").join(f)).unwrap(), fs::read(b.path().join("o").join(f)).unwrap(), "{f}");
    }
}
