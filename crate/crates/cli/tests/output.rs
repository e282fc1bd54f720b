use std::fs;
use std::process::Command;

use clm_cli::config::{Experiment, ExperimentConfig};
use clm_cli::{run, write_csv, write_json, CSV_COLUMNS};
use serde_json::Value;

fn short(experiment: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(experiment);
    cfg.n = 32;
    cfg.dt = 5e-3;
    cfg.t_final = 1.0;
    cfg.sample_every = 20;
    cfg.transient = 0.2;
    cfg
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(i.to_string());
        let report = run(&short(Experiment::GroundStability)).unwrap();
        bytes.push(fs::read(write_csv(&report, &out).unwrap()).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);

    let mut other = short(Experiment::GroundStability);
    other.init = other.init.with_seed(99);
    let report = run(&other).unwrap();
    let path = write_csv(&report, &dir.path().join("other")).unwrap();
    assert_ne!(fs::read(path).unwrap(), bytes[0]);
}

#[test]
fn csv_columns_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&short(Experiment::Conservation)).unwrap();
    let mut reader = csv::Reader::from_path(write_csv(&report, dir.path()).unwrap()).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert_eq!(r.len(), CSV_COLUMNS.len());
        let t: f64 = r[0].parse().unwrap();
        assert!((0.0..=1.0).contains(&t));
        // no equilibrium in a conservation run
        assert_eq!(&r[6], "");
    }
}

#[test]
fn json_report_has_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&short(Experiment::GroundStability)).unwrap();
    let text = fs::read_to_string(write_json(&report, dir.path()).unwrap()).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["experiment"], "ground_stability");
    assert_eq!(v["config"]["N"], "32");
    assert_eq!(v["rows"], 11);
    assert!(v["metrics"]["hdw_rate"].is_number());
    assert!(v["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(v["blow_up"].is_null());
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["criterion"], 7);
    for key in ["description", "detail"] {
        assert!(checks[0][key].is_string());
    }
    assert!(checks[0]["passed"].is_boolean());
    assert_eq!(v["passed"], checks[0]["passed"]);
}

#[test]
fn binary_runs_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(
        &config,
        "experiment = conservation\nN = 32\ndt = 0.005\nT = 0.5\nsample_every = 10\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_clm"))
        .arg("run")
        .arg(&config)
        .args(["--init", "bump(a=1.5)", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("criterion  2"), "{stdout}");
    let v: Value =
        serde_json::from_str(&fs::read_to_string(out.join("conservation.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["init"], "bump(a=1.5)");
    assert!(out.join("conservation.csv").exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_clm"))
        .args(["run", "--experiment", "conservation", "--dt", "0.1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("CFL"));
}
