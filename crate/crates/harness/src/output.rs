//! Result files. Everything except `timing.json` is a deterministic
//! function of the config and seed.
//!
//! - `summary.json`: version, config echo (without the output directory)
//!   and [`RunSummary`].
//! - `timing.json`: wall time and the per-second rates.
//! - `trace.csv`: `iter` then the tracked coordinates, every `thin` steps.
//! - `adapt.csv`: one [`AdaptRow`] every `adapt_log_stride` steps.
//! - `acf.csv`: `coord` then one `lag_<l>` column per configured lag,
//!   from the full-resolution post-burn-in samples.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::{acf_rows, Columns, RunResult, RunSummary};

pub fn version_string() -> String {
    format!("infdim v{}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub version: String,
    pub config: ExperimentConfig,
    pub result: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingFile {
    pub wall_seconds: f64,
    pub iterations_per_sec: f64,
    pub min_ess_per_sec: f64,
    pub median_ess_per_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub summary: PathBuf,
    pub timing: PathBuf,
    pub trace: PathBuf,
    pub adapt: PathBuf,
    pub acf: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            summary: dir.join("summary.json"),
            timing: dir.join("timing.json"),
            trace: dir.join("trace.csv"),
            adapt: dir.join("adapt.csv"),
            acf: dir.join("acf.csv"),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

fn csv_bytes(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let wrap = |e: csv::Error| HarnessError::Data { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| HarnessError::Data { path: path.to_path_buf(), message: e.to_string() })
}

/// The `acf.csv` table for named columns; `diagnose` uses the same code, so
/// a trace written with `thin = 1` regenerates the file byte for byte.
pub fn acf_csv(columns: &Columns, lags: &[usize]) -> Result<Vec<u8>> {
    let rows = acf_rows(columns, lags)?;
    let mut header = vec!["coord".to_string()];
    header.extend(lags.iter().map(|l| format!("lag_{l}")));
    csv_bytes(
        Path::new("acf.csv"),
        &header,
        columns.names.iter().zip(rows).map(|(n, r)| {
            let mut row = vec![n.clone()];
            row.extend(r.iter().map(f64::to_string));
            row
        }),
    )
}

pub fn write_results(result: &RunResult, dir: &Path) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let paths = OutputPaths::in_dir(dir);

    // The echo leaves out where the files went, so reruns into another
    // directory stay byte-identical.
    let mut config = result.config.clone();
    config.run.output_dir = None;
    let summary = SummaryFile { version: version_string(), config, result: result.summary.clone() };
    let mut text = serde_json::to_vec_pretty(&summary)?;
    text.push(b'\n');
    write_file(&paths.summary, &text)?;

    let t = &result.ess_timing;
    let timing = TimingFile {
        wall_seconds: result.wall_seconds,
        iterations_per_sec: result.summary.iterations as f64 / result.wall_seconds,
        min_ess_per_sec: t.min_per_sec,
        median_ess_per_sec: t.median_per_sec,
    };
    let mut text = serde_json::to_vec_pretty(&timing)?;
    text.push(b'\n');
    write_file(&paths.timing, &text)?;

    let mut header = vec!["iter".to_string()];
    header.extend(result.columns.names.iter().cloned());
    let rows = result.trace_rows.iter().map(|(it, r)| {
        let mut row = vec![it.to_string()];
        row.extend(r.iter().map(f64::to_string));
        row
    });
    write_file(&paths.trace, &csv_bytes(&paths.trace, &header, rows)?)?;

    let header: Vec<String> =
        ["iter", "j", "beta", "delta", "n_trunc", "accept_ema", "equivalence_diagnostic"].map(String::from).to_vec();
    let rows = result.adapt_rows.iter().map(|a| {
        vec![
            a.iter.to_string(),
            a.j.to_string(),
            a.beta.to_string(),
            a.delta.to_string(),
            a.n_trunc.to_string(),
            a.accept_ema.to_string(),
            a.equivalence_diagnostic.to_string(),
        ]
    });
    write_file(&paths.adapt, &csv_bytes(&paths.adapt, &header, rows)?)?;

    write_file(&paths.acf, &acf_csv(&result.columns, &result.config.run.acf_lags)?)?;
    Ok(paths)
}

/// Reads a `trace.csv`, keeping rows with `iter > burn_in`.
pub fn read_trace(path: &Path, burn_in: u64) -> Result<Columns> {
    let data = |message: String| HarnessError::Data { path: path.to_path_buf(), message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| data(e.to_string()))?;
    let header = reader.headers().map_err(|e| data(e.to_string()))?.clone();
    if header.get(0) != Some("iter") || header.len() < 2 {
        return Err(data("line 1: expected header `iter,<coordinate>,...`".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut values = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| data(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let it: u64 = record[0].parse().map_err(|_| data(format!("line {line}: bad iteration `{}`", &record[0])))?;
        if it <= burn_in {
            continue;
        }
        for (k, col) in values.iter_mut().enumerate() {
            let field = &record[k + 1];
            col.push(field.parse().map_err(|_| data(format!("line {line}: `{field}` is not a number")))?);
        }
    }
    Ok(Columns { names, values })
}
