use std::path::{Path, PathBuf};
use std::process::Command;

use popscale_cli::output::ReadTable;
use popscale_cli::{CellStatus, RunManifest};
use popscale_core::stats::ks_two_sample;

const BIN: &str = env!("CARGO_BIN_EXE_popscale");

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn popscale(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).env_remove("POPSCALE_OUTPUT_DIR").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const PHI: &str = r#"{
  "lab": "hj",
  "model": {"experiment": "phi", "model": {"packaged": "three_state_sweeps"}, "horizon": 5.0, "steps": 20},
  "seeds": [7]
}"#;

fn data_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn one_seed_without_sweep_gives_one_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PHI);
    let out = tmp.path().join("run");
    let (code, _, err) = popscale(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let manifest = RunManifest::load(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.cells.len(), 1);
    assert_eq!(manifest.cells[0].status, CellStatus::Ok);
    assert_eq!(manifest.config_hash.len(), 64);
    let (code, stdout, _) = popscale(&["report", out.join("manifest.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 2, "{stdout}");
}

#[test]
fn invalid_field_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &PHI.replace("\"steps\": 20", "\"steps\": -3"));
    let out = tmp.path().join("run");
    let (code, _, err) = popscale(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("model.steps"), "{err}");
    assert!(!out.exists());
    let (code, _, err) = popscale(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("model.steps"), "{err}");
    let unknown = write_config(tmp.path(), &PHI.replace("three_state_sweeps", "nope"));
    let (code, _, err) = popscale(&["validate", unknown.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("model.model.packaged"), "{err}");
}

#[test]
fn lab_errors_exit_3_and_keep_other_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
          "lab": "adaptive_dynamics",
          "model": {"experiment": "first_jump", "model": {"packaged": "linear_fitness_upward"},
                    "k": 20, "marker_rate": 20.0, "x0": 0.0, "replicates": 3},
          "sweep": [{}, {"x0": 6.0}],
          "seeds": [1]
        }"#,
    );
    let out = tmp.path().join("run");
    let (code, _, err) = popscale(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("s001-seed1"), "{err}");
    let manifest = RunManifest::load(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.cells[0].status, CellStatus::Ok);
    assert_eq!(manifest.cells[1].status, CellStatus::Failed);
    assert!(out.join("cells/s000-seed1/waiting_times.csv").is_file());
    assert_eq!(manifest.regime_reports.len(), 2);
    let (code, stdout, _) = popscale(&["report", out.join("manifest.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("failed"));
}

#[test]
fn missing_outputs_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PHI);
    let out = tmp.path().join("run");
    assert_eq!(popscale(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).0, 0);
    std::fs::remove_file(out.join("cells/s000-seed7/phi.csv")).unwrap();
    let (code, _, err) = popscale(&["report", out.join("manifest.json").to_str().unwrap()]);
    assert_eq!(code, 4);
    assert!(err.contains("s000-seed7"), "{err}");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
          "lab": "adaptive_dynamics",
          "model": {"experiment": "tss_cead", "model": {"packaged": "linear_fitness_symmetric"},
                    "sigmas": [0.2, 0.1], "x0": 0.0, "horizon": 1.0, "replicates": 8},
          "sweep": [{}, {"x0": 1.0}],
          "seeds": [1, 2, 3]
        }"#,
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(popscale(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--parallel", "1"]).0, 0);
    assert_eq!(popscale(&["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--parallel", "3"]).0, 0);
    let ra = popscale(&["report", a.join("manifest.json").to_str().unwrap()]);
    let rb = popscale(&["report", b.join("manifest.json").to_str().unwrap()]);
    assert_eq!(ra.1, rb.1);
    assert_eq!(data_files(&a), data_files(&b));
    let ma = RunManifest::load(&a.join("manifest.json")).unwrap();
    let mb = RunManifest::load(&b.join("manifest.json")).unwrap();
    assert_eq!(ma.config_hash, mb.config_hash);
    assert_eq!(ma.cells, mb.cells);
}

#[test]
fn output_dir_falls_back_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PHI);
    let out = tmp.path().join("from-env");
    let status = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap()])
        .env("POPSCALE_OUTPUT_DIR", &out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn report_slope_of_an_exact_power_law() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("cells/c")).unwrap();
    let mut csv = String::from("scale,error\n");
    for x in [1.0f64, 2.0, 4.0, 8.0, 16.0, 32.0] {
        csv.push_str(&format!("{x},{}\n", 1.0 / x));
    }
    std::fs::write(dir.join("cells/c/convergence.csv"), csv).unwrap();
    std::fs::write(dir.join("cells/c/summary.json"), "{}").unwrap();
    let manifest = r#"{"config_hash": "", "version": "0", "lab": "hj", "seeds": [0], "wall_clock_seconds": 0.0,
            "cells": [{"id": "c", "sweep_index": 0, "seed": 0, "status": "ok",
                        "files": ["cells/c/convergence.csv", "cells/c/summary.json"]}]}"#;
    std::fs::write(dir.join("manifest.json"), manifest).unwrap();
    let table = popscale_cli::report(&dir.join("manifest.json")).unwrap();
    assert_eq!(table.rows.len(), 1);
    let back = ReadTable::read(&dir.join("report.csv")).unwrap();
    let slope = back.numeric_column("slope").unwrap()[0];
    assert!((slope + 1.0).abs() < 0.01, "{slope}");
}

#[test]
fn ks_of_a_sample_against_itself_is_zero() {
    let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
    assert_eq!(ks_two_sample(&xs, &xs), 0.0);
}

#[test]
fn labs_do_not_write_files() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("..");
    for lab in ["core", "branching", "groupsel", "hj", "adaptive"] {
        let src = root.join(lab).join("src");
        for entry in std::fs::read_dir(&src).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            for needle in ["std::fs", "File::create", "OpenOptions", "fs::write"] {
                assert!(!text.contains(needle), "{} uses {needle}", path.display());
            }
        }
    }
}
