//! Experiment configuration: the on-disk schema, sweep expansion and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::labs::LabPayload;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lab {
    Branching,
    GroupSelection,
    Hj,
    AdaptiveDynamics,
}

/// A parsed configuration file. The model payload is kept as raw JSON until each sweep
/// override has been merged into it; [`ExperimentConfig::cells`] then types every variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lab: Lab,
    pub model: Value,
    /// Objects merged key by key into `model`, one sweep point each.
    #[serde(default)]
    pub sweep: Vec<Value>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// One (sweep point × seed) unit of work.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: String,
    pub sweep_index: usize,
    pub seed: u64,
    pub payload: LabPayload,
}

impl ExperimentConfig {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
            path: display_path(&e.path().to_string()),
            message: e.inner().to_string(),
        })?;
        if config.seeds.is_empty() {
            return Err(CliError::schema("seeds", "at least one seed is required"));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Merged model payload of every sweep point, typed and validated.
    pub fn payloads(&self) -> Result<Vec<LabPayload>> {
        let overrides =
            if self.sweep.is_empty() { vec![Value::Object(Default::default())] } else { self.sweep.clone() };
        overrides
            .iter()
            .enumerate()
            .map(|(i, over)| {
                let prefix = if self.sweep.is_empty() { "model".to_string() } else { format!("sweep[{i}]") };
                let Value::Object(fields) = over else {
                    return Err(CliError::schema(&prefix, "a sweep point must be an object of overrides"));
                };
                let mut merged = self.model.clone();
                let Value::Object(target) = &mut merged else {
                    return Err(CliError::schema("model", "must be an object"));
                };
                for (k, v) in fields {
                    target.insert(k.clone(), v.clone());
                }
                LabPayload::parse(self.lab, merged).map_err(|e| e.within(&prefix))
            })
            .collect()
    }

    /// Expands the sweep × seed grid. Fails before any simulation when a payload is invalid.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let payloads = self.payloads()?;
        Ok(payloads
            .iter()
            .enumerate()
            .flat_map(|(i, p)| {
                self.seeds.iter().map(move |&seed| Cell {
                    id: format!("s{i:03}-seed{seed}"),
                    sweep_index: i,
                    seed,
                    payload: p.clone(),
                })
            })
            .collect())
    }
}

/// Renders a `serde_path_to_error` path with `.` for the root.
pub(crate) fn display_path(path: &str) -> String {
    if path.is_empty() || path == "." {
        "<root>".to_string()
    } else {
        path.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(model: &str, sweep: &str) -> String {
        format!(r#"{{"lab": "hj", "model": {model}, "sweep": {sweep}, "seeds": [1, 2]}}"#)
    }

    const PHI: &str =
        r#"{"experiment": "phi", "model": {"packaged": "three_state_sweeps"}, "horizon": 5.0, "steps": 50}"#;

    #[test]
    fn empty_sweep_gives_one_cell_per_seed() {
        let c = ExperimentConfig::from_bytes(config(PHI, "[]").as_bytes()).unwrap();
        let cells = c.cells().unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].id, "s000-seed1");
    }

    #[test]
    fn sweep_overrides_are_merged() {
        let c = ExperimentConfig::from_bytes(config(PHI, r#"[{"steps": 10}, {"horizon": 2.0}]"#).as_bytes()).unwrap();
        assert_eq!(c.cells().unwrap().len(), 4);
    }

    #[test]
    fn errors_carry_the_field_path() {
        let bad = config(PHI, r#"[{"steps": "ten"}]"#);
        let err = ExperimentConfig::from_bytes(bad.as_bytes()).unwrap().cells().unwrap_err();
        match err {
            CliError::Schema { path, .. } => assert_eq!(path, "sweep[0].steps"),
            other => panic!("{other:?}"),
        }
        let err = ExperimentConfig::from_bytes(br#"{"lab": "hj", "model": {}, "seeds": "x"}"#).unwrap_err();
        assert!(matches!(err, CliError::Schema { ref path, .. } if path == "seeds"), "{err:?}");
        let err = ExperimentConfig::from_bytes(br#"{"lab": "hj", "model": {}, "seeds": []}"#).unwrap_err();
        assert!(matches!(err, CliError::Schema { ref path, .. } if path == "seeds"));
    }
}
