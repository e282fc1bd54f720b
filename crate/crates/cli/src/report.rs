//! Run reports and their CSV / JSON artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clm_core::DiagnosticsRow;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

pub const CSV_COLUMNS: [&str; 10] = [
    "t",
    "mass",
    "l2",
    "sqrt_h1",
    "sqrt_h1_dot",
    "min_omega",
    "hdw_perturb",
    "x_seminorm",
    "tilde_y_norm",
    "eta0_even",
];

/// Outcome of one acceptance rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub description: String,
    pub passed: bool,
    /// Measured values behind the verdict.
    pub detail: String,
    /// Time spent producing the verdict.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub rows: Vec<DiagnosticsRow>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Set when the integration stopped early.
    pub blow_up: Option<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        RunReport {
            config: config.clone(),
            rows: Vec::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            blow_up: None,
            wall_time_s: 0.0,
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Value {
        let config: serde_json::Map<String, Value> = self
            .config
            .to_pairs()
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect();
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "criterion": c.criterion,
                    "description": c.description,
                    "passed": c.passed,
                    "detail": c.detail,
                    "elapsed_s": c.elapsed_s,
                })
            })
            .collect();
        json!({
            "experiment": self.config.experiment.name(),
            "config": config,
            "rows": self.rows.len(),
            "metrics": self.metrics,
            "checks": checks,
            "passed": self.passed(),
            "blow_up": self.blow_up,
            "wall_time_s": self.wall_time_s,
        })
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the diagnostics table to `path`.
pub fn write_csv_to(report: &RunReport, path: &Path) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.t.to_string(),
            r.mass.to_string(),
            r.l2.to_string(),
            cell(r.sqrt_h1),
            cell(r.sqrt_h1_dot),
            r.min_omega.to_string(),
            cell(r.hdw_perturb),
            cell(r.x_seminorm),
            cell(r.tilde_y_norm),
            cell(r.eta0_even),
        ])?;
    }
    w.flush()
}

fn artifact_path(report: &RunReport, dir: &Path, ext: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(format!("{}.{ext}", report.config.experiment.name())))
}

/// Writes `<experiment>.csv` into `dir` and returns its path.
pub fn write_csv(report: &RunReport, dir: &Path) -> io::Result<PathBuf> {
    let path = artifact_path(report, dir, "csv")?;
    write_csv_to(report, &path)?;
    Ok(path)
}

/// Writes `<experiment>.json` into `dir` and returns its path.
pub fn write_json(report: &RunReport, dir: &Path) -> io::Result<PathBuf> {
    let path = artifact_path(report, dir, "json")?;
    let text = serde_json::to_string_pretty(&report.to_json()).map_err(io::Error::other)?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}
