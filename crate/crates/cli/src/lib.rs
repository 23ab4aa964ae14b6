//! Experiment harness for the popscale labs.
//!
//! A JSON configuration names a lab, a model payload, optional sweep overrides and a
//! list of seeds. [`run()`] expands it into (sweep point × seed) cells, executes them in
//! parallel and writes CSV/JSON outputs plus a [`RunManifest`]. [`report()`] turns a manifest
//! into a per-cell summary table from the stored outputs alone.
//!
//! Labs return [`CellOutput`] values; only this crate writes files.

pub mod config;
pub mod error;
pub mod labs;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Cell, ExperimentConfig, Lab};
pub use error::{CliError, Result};
pub use labs::LabPayload;
pub use output::{CellOutput, Field, Table};
pub use report::{report, REPORT_FILE};
pub use run::{
    run, validate, CellRecord, CellStatus, RunManifest, RunOptions, RunOutcome, MANIFEST_FILE, OUTPUT_DIR_ENV,
};
