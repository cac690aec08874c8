//! Result directories: `manifest.json`, `verdicts.json` and `tables/*.csv`.
//!
//! Everything that depends on the machine or the clock goes in the manifest,
//! so verdicts and tables are reproducible byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::harness::experiment::{ConvergenceReport, Environment, ExperimentResult, Timing};
use crate::path::fmt_f64;

pub const MANIFEST: &str = "manifest.json";
pub const VERDICTS: &str = "verdicts.json";
pub const TABLES: &str = "tables";

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    name: String,
    configs: Vec<ExperimentConfig>,
    environment: Environment,
    timing: Vec<Timing>,
}

#[derive(Serialize, Deserialize)]
struct Verdicts {
    schema_version: u32,
    name: String,
    pass: bool,
    reports: Vec<ConvergenceReport>,
}

fn table_name(r: &ConvergenceReport) -> String {
    format!("{}__{}.csv", r.config_id, r.check)
}

/// Writes the result directory, creating it if needed.
pub fn write_result(dir: &Path, result: &ExperimentResult) -> Result<()> {
    fs::create_dir_all(dir.join(TABLES))?;
    let manifest = Manifest {
        schema_version: result.schema_version,
        name: result.name.clone(),
        configs: result.configs.clone(),
        environment: result.environment.clone(),
        timing: result.timing.clone(),
    };
    let verdicts = Verdicts {
        schema_version: result.schema_version,
        name: result.name.clone(),
        pass: result.pass(),
        reports: result.reports.clone(),
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    fs::write(dir.join(VERDICTS), serde_json::to_string_pretty(&verdicts)? + "\n")?;
    for r in &result.reports {
        let mut w = csv::Writer::from_path(dir.join(TABLES).join(table_name(r)))?;
        w.write_record(["scale", "median", "mean", "q10", "q90", "max"])?;
        for l in &r.levels {
            w.write_record([l.scale, l.median, l.mean, l.q10, l.q90, l.max].map(fmt_f64))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Malformed(format!("{}: missing schema_version", path.display())))?;
    if found != SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion {
            found: found.min(u32::MAX as u64) as u32,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(serde_json::from_value(value)?)
}

/// Reads back what [`write_result`] wrote. Tables are derived data and are not read.
pub fn read_result(dir: &Path) -> Result<ExperimentResult> {
    let m: Manifest = read_versioned(&dir.join(MANIFEST))?;
    let v: Verdicts = read_versioned(&dir.join(VERDICTS))?;
    if m.name != v.name {
        return Err(Error::Malformed(format!("manifest names {:?}, verdicts name {:?}", m.name, v.name)));
    }
    Ok(ExperimentResult {
        schema_version: m.schema_version,
        name: m.name,
        configs: m.configs,
        reports: v.reports,
        environment: m.environment,
        timing: m.timing,
    })
}

/// Plain-text summary, one line per report.
pub fn render_summary(result: &ExperimentResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} ({} reports)", result.name, result.reports.len());
    let _ = writeln!(s, "{:<6} {:<30} {:<28} {:>12} {:>8}  detail", "", "config", "check", "final med", "slope");
    for r in &result.reports {
        let last = r.levels.last().map_or(f64::NAN, |l| l.median);
        let slope = r.slope.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        let tag = match (r.pass, r.rule_holds) {
            (true, true) => "PASS",
            (true, false) => "PASS*",
            (false, _) => "FAIL",
        };
        let _ = writeln!(
            s,
            "{tag:<6} {:<30} {:<28} {last:>12.3e} {slope:>8}  {}",
            r.config_id, r.check, r.detail
        );
    }
    let _ = writeln!(s, "PASS* = expected violation observed");
    let _ = writeln!(s, "overall: {}", if result.pass() { "PASS" } else { "FAIL" });
    s
}
