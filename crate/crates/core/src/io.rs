//! Delimited-text input, JSON run artifacts and the per-replication table.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::math::Y_EPS;
use crate::model::Dataset;
use crate::simulate::SimReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "BETALASSO_THREADS";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Thread count from [`THREADS_ENV`], if set to a positive integer.
pub fn default_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|t| *t > 0)
}

/// Response column given by header name or 0-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl FromStr for ResponseColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ResponseColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseColumn::Name(n) => f.write_str(n),
            ResponseColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadOptions {
    pub response: ResponseColumn,
    /// `None` picks the most frequent of `,`, tab and `;` in the header.
    pub delimiter: Option<u8>,
    pub standardize: bool,
    /// Drop rows with missing cells instead of rejecting the file.
    pub drop_missing: bool,
}

impl ReadOptions {
    pub fn new(response: ResponseColumn) -> Self {
        Self {
            response,
            delimiter: None,
            standardize: false,
            drop_missing: false,
        }
    }
}

/// Column centring and scaling applied to the predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Standard deviations with divisor `n`.
    pub scales: Vec<f64>,
}

impl Standardization {
    /// Centers each column and scales it to unit empirical variance.
    pub fn apply(x: &mut DMatrix<f64>) -> Result<Standardization> {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut scales = Vec::with_capacity(x.ncols());
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(Error::Validation(format!(
                    "predictor column {j} is constant and cannot be standardized"
                )));
            }
            for v in col.iter_mut() {
                *v = (*v - mean) / sd;
            }
            means.push(mean);
            scales.push(sd);
        }
        Ok(Standardization { means, scales })
    }

    /// Maps standardized-scale coefficients back to the original predictors.
    pub fn to_original(&self, beta0: f64, beta: &[f64]) -> (f64, Vec<f64>) {
        let orig: Vec<f64> = beta.iter().zip(&self.scales).map(|(b, s)| b / s).collect();
        let shift: f64 = orig.iter().zip(&self.means).map(|(b, m)| b * m).sum();
        (beta0 - shift, orig)
    }
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub response_name: String,
    pub standardization: Option<Standardization>,
    /// 1-based data-row numbers dropped for missing values.
    pub dropped_rows: Vec<usize>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan" | "." | "null")
}

fn sniff_delimiter(path: &Path) -> Result<u8> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut header = String::new();
    BufReader::new(file)
        .read_line(&mut header)
        .map_err(|e| io_err(path, e))?;
    let best = (*b",\t;")
        .into_iter()
        .map(|d| (header.bytes().filter(|b| *b == d).count(), d))
        .max_by_key(|(count, _)| *count)
        .filter(|(count, _)| *count > 0);
    Ok(best.map_or(b',', |(_, d)| d))
}

/// Reads a delimited file with a header row into a [`Dataset`].
///
/// Rows are numbered from 1 after the header in error messages.
pub fn read_dataset(path: impl AsRef<Path>, options: &ReadOptions) -> Result<LoadedData> {
    let path = path.as_ref();
    let delimiter = match options.delimiter {
        Some(d) => d,
        None => sniff_delimiter(path)?,
    };
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| Error::Parse {
        row: e.position().map_or(0, |p| p.record() as usize),
        column: String::new(),
        message: e.to_string(),
    };
    let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let response = match &options.response {
        ResponseColumn::Index(i) if *i < headers.len() => *i,
        ResponseColumn::Name(name) if headers.contains(name) => headers.iter().position(|h| h == name).unwrap(),
        other => {
            return Err(Error::Validation(format!(
                "response column {other} not found; header is {headers:?}"
            )))
        }
    };
    if headers.len() < 2 {
        return Err(Error::Validation(
            "need at least one predictor column besides the response".into(),
        ));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    let mut dropped = Vec::new();
    let mut row_numbers = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(csv_err)?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        if let Some(j) = record.iter().position(is_missing) {
            if options.drop_missing {
                dropped.push(row);
                continue;
            }
            return Err(Error::Parse {
                row,
                column: headers[j].clone(),
                message: "missing value (use the drop-missing option to skip incomplete rows)".into(),
            });
        }
        let mut values = Vec::with_capacity(headers.len() - 1);
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[j].clone(),
                message: format!("not a number: {cell:?}"),
            })?;
            if j == response {
                y.push(v);
            } else {
                values.push(v);
            }
        }
        rows.push(values);
        row_numbers.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Validation("no complete data rows".into()));
    }

    let p = headers.len() - 1;
    let mut x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let standardization = if options.standardize {
        Some(Standardization::apply(&mut x)?)
    } else {
        None
    };
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != response)
        .map(|(_, h)| h.clone())
        .collect();
    let bad: Vec<usize> = y
        .iter()
        .zip(&row_numbers)
        .filter(|(v, _)| !(**v >= Y_EPS && **v <= 1.0 - Y_EPS))
        .map(|(_, r)| *r)
        .collect();
    if !bad.is_empty() {
        return Err(Error::Validation(format!(
            "responses must lie inside (0, 1) with a margin of 1e-12; offending rows: {bad:?}"
        )));
    }
    let dataset = Dataset::new(x, y)?.with_feature_names(names)?;
    Ok(LoadedData {
        dataset,
        response_name: headers[response].clone(),
        standardization,
        dropped_rows: dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Fit,
    Path,
    Debias,
    Sim,
    Select,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    /// SHA-256 of the configuration's JSON form.
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Provenance {
    pub fn new<C: Serialize>(config: &C, seed: Option<u64>) -> Result<Provenance> {
        Ok(Provenance {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config_hash(config)?,
            seed,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        })
    }
}

pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let bytes = serde_json::to_vec(config).map_err(|e| Error::Serialization {
        path: PathBuf::new(),
        message: e.to_string(),
    })?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// A result written to disk together with how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub kind: ArtifactKind,
    pub provenance: Provenance,
    pub payload: serde_json::Value,
}

impl RunArtifact {
    pub fn new<T: Serialize>(kind: ArtifactKind, payload: &T, provenance: Provenance) -> Result<RunArtifact> {
        let payload = serde_json::to_value(payload).map_err(|e| Error::Serialization {
            path: PathBuf::new(),
            message: e.to_string(),
        })?;
        Ok(RunArtifact {
            kind,
            provenance,
            payload,
        })
    }

    pub fn payload_as<T: DeserializeOwned>(&self) -> Result<T> {
        T::deserialize(&self.payload).map_err(|e| Error::Serialization {
            path: PathBuf::new(),
            message: e.to_string(),
        })
    }
}

/// Writes pretty-printed JSON. Doubles are written in shortest round-trip
/// form, so reading back reproduces them bit for bit.
pub fn write_artifact(artifact: &RunArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(artifact).map_err(|e| Error::Serialization {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut file = File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    file.write_all(b"\n").map_err(|e| io_err(path, e))
}

/// Reads an artifact, returning warnings such as a tool-version mismatch.
pub fn read_artifact(path: impl AsRef<Path>) -> Result<(RunArtifact, Vec<String>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let artifact: RunArtifact = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Serialization {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut warnings = Vec::new();
    if artifact.provenance.tool_version != TOOL_VERSION {
        warnings.push(format!(
            "artifact was written by version {} (this is {TOOL_VERSION})",
            artifact.provenance.tool_version
        ));
    }
    Ok((artifact, warnings))
}

/// One row per replication: `rep,l1_error,tpr,fpr,coverage,iterations`.
/// Coverage is empty when intervals were not computed.
pub fn write_sim_table(report: &SimReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serialization {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let ser = |e: csv::Error| Error::Serialization {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record(["rep", "l1_error", "tpr", "fpr", "coverage", "iterations"])
        .map_err(ser)?;
    for r in &report.per_rep {
        w.write_record([
            r.rep.to_string(),
            r.l1_error.to_string(),
            r.tpr.to_string(),
            r.fpr.to_string(),
            r.coverage.map_or(String::new(), |c| c.to_string()),
            r.iterations.to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
