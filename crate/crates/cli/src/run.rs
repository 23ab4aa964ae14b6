//! Executes the cells of a configuration and persists their outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Cell, ExperimentConfig, Lab};
use crate::error::{CliError, Result};
use crate::output::{canonical_json, sha256_hex, write_atomic, CellOutput};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
/// Fallback output directory when neither `--out` nor the config names one.
pub const OUTPUT_DIR_ENV: &str = "POPSCALE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: String,
    pub sweep_index: usize,
    pub seed: u64,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Paths relative to the manifest directory.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRegime {
    pub sweep_index: usize,
    pub report: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the canonical JSON of the configuration.
    pub config_hash: String,
    pub version: String,
    pub lab: Lab,
    pub seeds: Vec<u64>,
    pub wall_clock_seconds: f64,
    pub cells: Vec<CellRecord>,
    #[serde(default)]
    pub regime_reports: Vec<SweepRegime>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses the rayon default.
    pub parallel: Option<usize>,
}

/// Outcome of [`run`]: the manifest location, plus an error when some cells failed.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest_path: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    /// Lab failures, as the error the process exits with.
    pub fn failure(&self) -> Option<CliError> {
        let failed: Vec<&CellRecord> = self.manifest.cells.iter().filter(|c| c.status == CellStatus::Failed).collect();
        (!failed.is_empty()).then(|| CliError::Lab {
            failed: failed.len(),
            messages: failed
                .iter()
                .map(|c| format!("  {}: {}", c.id, c.error.as_deref().unwrap_or("")))
                .collect::<Vec<_>>()
                .join("\n"),
        })
    }
}

pub fn resolve_output_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("popscale-out"))
}

fn persist(dir: &Path, cell: &Cell, output: &CellOutput) -> Result<Vec<String>> {
    let rel = Path::new("cells").join(&cell.id);
    let abs = dir.join(&rel);
    std::fs::create_dir_all(&abs).map_err(|e| CliError::io(&abs, e))?;
    let mut files = Vec::new();
    for table in &output.tables {
        let name = format!("{}.csv", table.name);
        write_atomic(&abs.join(&name), &table.to_csv()?)?;
        files.push(rel.join(name).to_string_lossy().into_owned());
    }
    let mut summary = serde_json::to_vec_pretty(&output.summary).map_err(|e| CliError::Data(e.to_string()))?;
    summary.push(b'\n');
    write_atomic(&abs.join("summary.json"), &summary)?;
    files.push(rel.join("summary.json").to_string_lossy().into_owned());
    Ok(files)
}

/// Validates, executes every cell (in parallel) and writes outputs plus the manifest.
/// Failing cells are recorded and do not stop the others.
pub fn run(config_bytes: &[u8], options: &RunOptions) -> Result<RunOutcome> {
    let config = ExperimentConfig::from_bytes(config_bytes)?;
    let cells = config.cells()?;
    let raw: Value = serde_json::from_slice(config_bytes).map_err(|e| CliError::Data(e.to_string()))?;
    let canonical = canonical_json(&raw)?;
    let dir = resolve_output_dir(&config, options.out.as_deref());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write_atomic(&dir.join(CONFIG_FILE), &canonical)?;

    let started = Instant::now();
    let execute = || -> Vec<Result<CellRecord>> {
        cells
            .par_iter()
            .map(|cell| {
                let mut record = CellRecord {
                    id: cell.id.clone(),
                    sweep_index: cell.sweep_index,
                    seed: cell.seed,
                    status: CellStatus::Ok,
                    error: None,
                    files: Vec::new(),
                };
                match cell.payload.run(cell.seed) {
                    Ok(output) => record.files = persist(&dir, cell, &output)?,
                    Err(message) => {
                        record.status = CellStatus::Failed;
                        record.error = Some(message);
                    }
                }
                Ok(record)
            })
            .collect()
    };
    let records = match options.parallel {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Data(e.to_string()))?
            .install(execute),
        None => execute(),
    };
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let payloads = config.payloads()?;
    let manifest = RunManifest {
        config_hash: sha256_hex(&canonical),
        version: env!("CARGO_PKG_VERSION").to_string(),
        lab: config.lab,
        seeds: config.seeds.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        cells: records,
        regime_reports: payloads
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.regime_report().map(|report| SweepRegime { sweep_index: i, report }))
            .collect(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(&manifest_path, &bytes)?;
    Ok(RunOutcome { manifest_path, manifest })
}

/// Reads and validates a configuration without running it; returns the number of cells.
pub fn validate(config_bytes: &[u8]) -> Result<usize> {
    Ok(ExperimentConfig::from_bytes(config_bytes)?.cells()?.len())
}
