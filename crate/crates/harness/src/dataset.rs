//! CSV datasets. Classifier files carry `s_1,…,s_D,label`; lattice files
//! carry `row,col,count[,trials]`. A header row is mandatory.

use std::path::Path;

use infdim_core::models::{ClassifierData, LatticeCell, LatticeData};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Classifier,
    /// Lattice rows with a mandatory `trials` column and `count ≤ trials`.
    Binomial,
    /// Lattice rows of point counts; a `trials` column is ignored.
    Counts,
}

impl DatasetKind {
    pub fn for_model(kind: &str) -> Option<Self> {
        match kind {
            "logistic" => Some(Self::Classifier),
            "binomial_lattice" => Some(Self::Binomial),
            "lgcp" => Some(Self::Counts),
            _ => None,
        }
    }

    fn expected_header(self) -> &'static str {
        match self {
            Self::Classifier => "s_1,...,s_D,label",
            Self::Binomial => "row,col,count,trials",
            Self::Counts => "row,col,count[,trials]",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Classifier(ClassifierData),
    Lattice(LatticeData),
}

impl Dataset {
    /// `(rows, columns of covariates)`; lattice data reports 2 (row, col).
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Dataset::Classifier(d) => (d.len(), d.input_dim()),
            Dataset::Lattice(d) => (d.cells.len(), 2),
        }
    }
}

fn data_err(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Data { path: path.to_path_buf(), message: message.into() }
}

fn classifier_header_dim(header: &csv::StringRecord) -> Option<usize> {
    let d = header.len().checked_sub(1).filter(|&d| d > 0)?;
    let ok = header.iter().take(d).enumerate().all(|(i, h)| h.trim() == format!("s_{}", i + 1))
        && header.get(d).map(str::trim) == Some("label");
    ok.then_some(d)
}

pub fn load_dataset(path: &Path, kind: DatasetKind) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| data_err(path, e.to_string()))?;
    let header = reader.headers().map_err(|e| data_err(path, e.to_string()))?.clone();
    let header_text = header.iter().collect::<Vec<_>>().join(",");
    let missing =
        || data_err(path, format!("line 1: expected header `{}`, found `{header_text}`", kind.expected_header()));

    let mut record = csv::StringRecord::new();
    let mut next = |reader: &mut csv::Reader<std::fs::File>| -> Result<Option<(u64, csv::StringRecord)>> {
        match reader.read_record(&mut record) {
            Ok(true) => Ok(Some((record.position().map_or(0, |p| p.line()), record.clone()))),
            Ok(false) => Ok(None),
            Err(e) => Err(data_err(path, e.to_string())),
        }
    };

    let dataset = match kind {
        DatasetKind::Classifier => {
            let d = classifier_header_dim(&header).ok_or_else(missing)?;
            let (mut locations, mut labels) = (Vec::new(), Vec::new());
            while let Some((line, row)) = next(&mut reader)? {
                if row.len() != d + 1 {
                    return Err(data_err(path, format!("line {line}: expected {} fields, found {}", d + 1, row.len())));
                }
                let mut s = Vec::with_capacity(d);
                for (i, field) in row.iter().take(d).enumerate() {
                    match field.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => s.push(v),
                        _ => {
                            return Err(data_err(
                                path,
                                format!("line {line}: s_{} = `{field}` is not a finite number", i + 1),
                            ))
                        }
                    }
                }
                let label = match row[d].trim() {
                    "0" => 0,
                    "1" => 1,
                    other => return Err(data_err(path, format!("line {line}: label `{other}` is not 0 or 1"))),
                };
                locations.push(s);
                labels.push(label);
            }
            if labels.is_empty() {
                return Err(data_err(path, "no data rows"));
            }
            Dataset::Classifier(ClassifierData::new(locations, labels).map_err(|e| data_err(path, e.to_string()))?)
        }
        DatasetKind::Binomial | DatasetKind::Counts => {
            let names: Vec<&str> = header.iter().map(str::trim).collect();
            let has_trials = match names.as_slice() {
                ["row", "col", "count"] => false,
                ["row", "col", "count", "trials"] => true,
                _ => return Err(missing()),
            };
            if kind == DatasetKind::Binomial && !has_trials {
                return Err(missing());
            }
            let width = names.len();
            let mut cells = Vec::new();
            while let Some((line, row)) = next(&mut reader)? {
                if row.len() != width {
                    return Err(data_err(path, format!("line {line}: expected {width} fields, found {}", row.len())));
                }
                let int = |i: usize| -> Result<u64> {
                    row[i].trim().parse::<u64>().map_err(|_| {
                        data_err(
                            path,
                            format!("line {line}: {} = `{}` is not a nonnegative integer", names[i], &row[i]),
                        )
                    })
                };
                let narrow = |i: usize, v: u64| -> Result<u32> {
                    u32::try_from(v)
                        .map_err(|_| data_err(path, format!("line {line}: {} = {v} is too large", names[i])))
                };
                let (r, c) = (int(0)? as usize, int(1)? as usize);
                let count = narrow(2, int(2)?)?;
                let trials = if has_trials { Some(narrow(3, int(3)?)?) } else { None };
                if kind == DatasetKind::Binomial {
                    if let Some(n) = trials.filter(|&n| count > n) {
                        return Err(data_err(path, format!("line {line}: count {count} exceeds trials {n}")));
                    }
                }
                cells.push(LatticeCell {
                    row: r,
                    col: c,
                    count,
                    trials: if kind == DatasetKind::Counts { None } else { trials },
                });
            }
            Dataset::Lattice(LatticeData { cells })
        }
    };
    let (rows, cols) = dataset.dims();
    log::info!("loaded {}: {rows} rows, dimension {cols}", path.display());
    Ok(dataset)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| data_err(path, e.to_string()))
}

/// Floats are written in Rust's shortest round-trip form, so loading the
/// file reproduces the dataset exactly.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = writer(path)?;
    match data {
        Dataset::Classifier(d) => {
            let dim = d.input_dim();
            let mut header: Vec<String> = (1..=dim).map(|i| format!("s_{i}")).collect();
            header.push("label".into());
            w.write_record(&header)?;
            for (s, y) in d.locations.iter().zip(&d.labels) {
                let mut row: Vec<String> = s.iter().map(f64::to_string).collect();
                row.push(y.to_string());
                w.write_record(&row)?;
            }
        }
        Dataset::Lattice(d) => {
            let with_trials = d.cells.iter().any(|c| c.trials.is_some());
            if with_trials {
                w.write_record(["row", "col", "count", "trials"])?;
            } else {
                w.write_record(["row", "col", "count"])?;
            }
            for c in &d.cells {
                let mut row = vec![c.row.to_string(), c.col.to_string(), c.count.to_string()];
                if with_trials {
                    row.push(c.trials.unwrap_or(0).to_string());
                }
                w.write_record(&row)?;
            }
        }
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Nodal field values as a single `u` column.
pub fn write_field(path: &Path, field: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["u"])?;
    for v in field {
        w.write_record([v.to_string()])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
