//! File emission for experiment results.
//!
//! Four files per run: records.csv (one row per record), summary.json
//! (config echo, statistics, theory block, metadata), histogram.csv
//! (100 uniform bins over the declared window), theory.json (the theory
//! block alone).  Everything except the wall-time field in summary.json is
//! a pure function of the configuration.

use std::fs;
use std::path::Path;

use gote_core::tensor::fmt_float;
use gote_core::{Error, Result};

use crate::experiment::ExperimentResult;
use crate::json::Json;

pub fn emit(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write(dir, "records.csv", &render_records(result))?;
    write(dir, "histogram.csv", &render_histogram(result))?;
    write(dir, "theory.json", &result.theory.render())?;
    write(dir, "summary.json", &summary_json(result).render())?;
    Ok(())
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| io_err(&path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn render_records(result: &ExperimentResult) -> String {
    let mut out = String::new();
    let names: Vec<&str> = result.columns.iter().map(|c| c.name).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for row in &result.rows {
        for (k, (column, value)) in result.columns.iter().zip(row).enumerate() {
            if k > 0 {
                out.push(',');
            }
            if column.integer && value.fract() == 0.0 && value.abs() < 9e15 {
                out.push_str(&format!("{}", *value as i64));
            } else {
                out.push_str(&fmt_float(*value));
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_histogram(result: &ExperimentResult) -> String {
    let h = &result.histogram;
    let bins = h.counts.len();
    let width = (h.right - h.left) / bins as f64;
    let mut out = String::from("bin_left,bin_right,count\n");
    for (k, count) in h.counts.iter().enumerate() {
        let left = h.left + width * k as f64;
        let right = if k + 1 == bins { h.right } else { h.left + width * (k + 1) as f64 };
        out.push_str(&format!("{},{},{count}\n", fmt_float(left), fmt_float(right)));
    }
    out
}

pub fn summary_json(result: &ExperimentResult) -> Json {
    let mut config = Json::obj();
    for (key, value) in result.config.echo() {
        config.push(&key, value);
    }
    let mut meta = Json::obj();
    meta.push("version", env!("CARGO_PKG_VERSION"))
        .push("records", result.rows.len())
        .push("wall_seconds", result.wall_seconds);
    let mut root = Json::obj();
    root.push("config", config)
        .push("stats", result.summary.clone())
        .push("theory", result.theory.clone())
        .push("meta", meta);
    root
}
