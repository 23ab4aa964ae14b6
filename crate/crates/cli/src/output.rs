//! In-memory results of a cell and their serialized forms.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Field {
    /// Floats use 17 significant digits so that they parse back to the same bits.
    pub fn render(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Num(v) if v.is_nan() => "NaN".to_string(),
            Self::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.to_string(),
            Self::Num(v) => format!("{v:.16e}"),
            Self::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Self::Num(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<u32> for Field {
    fn from(v: u32) -> Self {
        Self::Int(v as i64)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let data = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record(&self.columns).map_err(data)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Field::render)).map_err(data)?;
        }
        w.into_inner().map_err(|e| CliError::Data(e.to_string()))
    }
}

/// Everything a lab produces for one cell. Labs never touch the filesystem; the harness
/// persists this.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
}

/// Column-oriented view of a CSV file read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReadTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let columns = r
            .headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(Self { columns, rows })
    }

    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Data(format!("missing column `{name}`")))?;
        self.rows
            .iter()
            .map(|row| row[j].parse::<f64>().map_err(|e| CliError::Data(format!("column `{name}`: {e}"))))
            .collect()
    }
}

/// Sorted keys, shortest round-trip floats, no whitespace.
pub fn canonical_json(value: &impl Serialize) -> Result<Vec<u8>> {
    // Value maps are ordered, so a round trip through Value sorts every object.
    let v = serde_json::to_value(value).map_err(|e| CliError::Data(e.to_string()))?;
    serde_json::to_vec(&v).map_err(|e| CliError::Data(e.to_string()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}
