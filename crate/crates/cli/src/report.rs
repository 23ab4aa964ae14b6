//! Summary statistics computed from the persisted outputs of a run. Nothing is re-simulated.

use std::path::Path;

use serde_json::Value;

use popscale_core::stats::{ks_statistic, loglog_slope};

use crate::error::{CliError, Result};
use crate::output::{write_atomic, Field, ReadTable, Table};
use crate::run::{CellStatus, RunManifest};

pub const REPORT_FILE: &str = "report.csv";

const COLUMNS: [&str; 10] =
    ["cell", "sweep_index", "seed", "status", "slope", "slope_se", "ks", "residual", "regime", "gate_violations"];

fn blank() -> Field {
    Field::Text(String::new())
}

fn cell_row(dir: &Path, files: &[String]) -> Result<Vec<Field>> {
    let mut slope = (blank(), blank());
    let mut ks = blank();
    let mut residual = blank();
    let mut regime = blank();
    let mut gate = blank();
    let summary: Value = match files.iter().find(|f| f.ends_with("summary.json")) {
        Some(f) => {
            let path = dir.join(f);
            let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
        None => Value::Null,
    };
    if let Some(r) = summary.get("residual").and_then(Value::as_f64) {
        residual = r.into();
    }
    if let Some(r) = summary.get("regime").and_then(Value::as_str) {
        regime = r.into();
    }
    for f in files.iter().filter(|f| f.ends_with(".csv")) {
        let table = ReadTable::read(&dir.join(f))?;
        let stem = Path::new(f).file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        match stem {
            "convergence" => {
                let fit = loglog_slope(&table.numeric_column("scale")?, &table.numeric_column("error")?);
                slope = (fit.slope.into(), fit.slope_se.into());
            }
            "waiting_times" => {
                let rate = summary
                    .get("tss_rate")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| CliError::Data(format!("{f}: summary lacks `tss_rate`")))?;
                let times = table.numeric_column("time")?;
                ks = ks_statistic(&times, |t| 1.0 - (-rate * t).exp()).into();
            }
            "jumps" => {
                let fitness = table.numeric_column("fitness")?;
                let resident = table.numeric_column("resident_fitness")?;
                let bad = fitness.iter().zip(&resident).filter(|(f, r)| !(**f > 0.0) || r.abs() > 1e-12).count();
                gate = bad.into();
            }
            _ => {}
        }
    }
    Ok(vec![slope.0, slope.1, ks, residual, regime, gate])
}

/// Builds one summary row per cell and writes it next to the manifest.
pub fn report(manifest_path: &Path) -> Result<Table> {
    let manifest = RunManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let missing: Vec<String> = manifest
        .cells
        .iter()
        .filter(|c| c.files.iter().any(|f| !dir.join(f).is_file()))
        .map(|c| c.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::MissingOutputs(missing));
    }
    let mut table = Table::new("report", &COLUMNS);
    for c in &manifest.cells {
        let status = match c.status {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "failed",
        };
        let mut row = vec![c.id.as_str().into(), c.sweep_index.into(), Field::Int(c.seed as i64), status.into()];
        row.extend(cell_row(dir, &c.files)?);
        table.push(row);
    }
    write_atomic(&dir.join(REPORT_FILE), &table.to_csv()?)?;
    Ok(table)
}
