//! Kernel comparison tables: one row per kernel with min and median ESS per
//! iteration and per second, plus the final β.

use std::fs;
use std::path::{Path, PathBuf};

use infdim_core::samplers::KernelKind;
use serde::{Deserialize, Serialize};

use crate::config::{CompareConfig, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::run::{run_experiment, RunResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub kernel: KernelKind,
    pub beta: f64,
    pub acceptance: f64,
    pub min_ess: f64,
    pub median_ess: f64,
    pub min_ess_per_iter: f64,
    pub median_ess_per_iter: f64,
    pub min_ess_per_sec: f64,
    pub median_ess_per_sec: f64,
    pub wall_seconds: f64,
}

impl ComparisonRow {
    fn from_result(r: &RunResult) -> Self {
        let s = &r.summary;
        Self {
            kernel: s.kernel,
            beta: s.final_beta,
            acceptance: s.acceptance_rate,
            min_ess: s.ess.min_ess,
            median_ess: s.ess.median_ess,
            min_ess_per_iter: s.ess.min_per_iter,
            median_ess_per_iter: s.ess.median_per_iter,
            min_ess_per_sec: r.ess_timing.min_per_sec,
            median_ess_per_sec: r.ess_timing.median_per_sec,
            wall_seconds: r.wall_seconds,
        }
    }

    /// The row without its wall-clock columns, which are the only fields
    /// allowed to differ between identical runs.
    pub fn deterministic_part(&self) -> (KernelKind, [f64; 6]) {
        (
            self.kernel,
            [
                self.beta,
                self.acceptance,
                self.min_ess,
                self.median_ess,
                self.min_ess_per_iter,
                self.median_ess_per_iter,
            ],
        )
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub runs: Vec<RunResult>,
}

const HEADER: [&str; 10] = [
    "kernel",
    "beta",
    "acceptance",
    "min_ess",
    "median_ess",
    "min_ess_per_iter",
    "median_ess_per_iter",
    "min_ess_per_sec",
    "median_ess_per_sec",
    "wall_seconds",
];

impl Comparison {
    fn cells(&self, precise: bool) -> Vec<Vec<String>> {
        let f = |v: f64| if precise { v.to_string() } else { format!("{v:.4}") };
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![r.kernel.to_string()];
                row.extend(
                    [
                        r.beta,
                        r.acceptance,
                        r.min_ess,
                        r.median_ess,
                        r.min_ess_per_iter,
                        r.median_ess_per_iter,
                        r.min_ess_per_sec,
                        r.median_ess_per_sec,
                        r.wall_seconds,
                    ]
                    .map(f),
                );
                row
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER)?;
        for row in self.cells(true) {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Right-aligned columns, kernel names left-aligned.
    pub fn to_text(&self) -> String {
        let mut table = vec![HEADER.map(String::from).to_vec()];
        table.extend(self.cells(false));
        let widths: Vec<usize> =
            (0..HEADER.len()).map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &table {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(
                    |(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) },
                )
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// Writes `comparison.csv` and `comparison.txt`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let (csv_path, txt_path) = (dir.join("comparison.csv"), dir.join("comparison.txt"));
        fs::write(&csv_path, self.to_csv()?).map_err(|e| HarnessError::io(&csv_path, e))?;
        fs::write(&txt_path, self.to_text()).map_err(|e| HarnessError::io(&txt_path, e))?;
        Ok((csv_path, txt_path))
    }
}

/// Runs the configs concurrently, one chain per thread; rows keep the input
/// order. All configs must share the model and the run length.
pub fn compare_kernels(configs: &[ExperimentConfig]) -> Result<Comparison> {
    let Some(first) = configs.first() else {
        return Err(HarnessError::invalid("no configurations to compare"));
    };
    let mut errors = Vec::new();
    for (i, c) in configs.iter().enumerate().skip(1) {
        if c.model != first.model {
            errors.push(format!("config {i}: model differs from config 0"));
        }
        if c.run.iterations != first.run.iterations || c.adaptation.burn_in != first.adaptation.burn_in {
            errors.push(format!("config {i}: run length differs from config 0"));
        }
    }
    if !errors.is_empty() {
        return Err(HarnessError::Validation(errors));
    }
    let runs: Vec<Result<RunResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_experiment(c))).collect();
        handles.into_iter().map(|h| h.join().expect("comparison worker panicked")).collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = runs.iter().map(ComparisonRow::from_result).collect();
    Ok(Comparison { rows, runs })
}

/// Expands a compare config, runs it, and writes the tables next to the
/// per-kernel run directories when an output directory is set.
pub fn run_comparison(cfg: &CompareConfig) -> Result<Comparison> {
    let cmp = compare_kernels(&cfg.expand())?;
    if let Some(dir) = &cfg.base.run.output_dir {
        cmp.write(dir)?;
    }
    Ok(cmp)
}
