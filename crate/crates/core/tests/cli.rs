use std::path::{Path, PathBuf};
use std::process::Command;

use noma_radcom::harness::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noma-radcom"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_are_valid() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path).unwrap().validate().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 3);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "trials = 0\n").unwrap();
    let out = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(&cfg, "no_such_key = 3\n").unwrap();
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin().args(["sweep", "--schemes", "noma,fdma"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "trials = 50\nschemes = [\"noma\"]\nsweep_variable = \"gamma_b_db\"\nsweep_values = [-10]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["sweep", "--trials", "1", "--gamma-p-db", "105", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["trials"], 1);
    assert_eq!(manifest["config"]["gamma_p_db"], 105.0);
    assert_eq!(manifest["records"].as_array().unwrap().len(), 1);
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("gamma_b_db,scheme,trials,converged"));
}

#[test]
fn radar_only_sweep_has_no_rate_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--schemes", "radar_only", "--trials", "3", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.path().join("sweep.csv").exists());
    let text = std::fs::read_to_string(dir.path().join("radar_only.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("point,sweep_value,theta_deg,desired,radar_only"));
    assert_eq!(lines.count(), 181);
}

#[test]
fn infeasible_realizations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--schemes", "noma", "--trials", "2", "--rate-multicast-min", "40", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    // trials, converged, infeasible, failed, then empty means
    assert_eq!(&row[2..7], ["2", "0", "2", "0", ""]);
}

#[test]
fn ideal_pattern_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["ideal-pattern", "--n-antennas", "4", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("ideal_pattern.csv")).unwrap();
    assert!(text.starts_with("theta_deg,gain_linear,gain_dB\n"));
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    // 17 significant digits in scientific notation
    assert!(first.iter().all(|f| f.split('e').next().unwrap().trim_start_matches('-').len() == 18));
}
