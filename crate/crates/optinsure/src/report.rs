//! CSV and text output.
//!
//! Numbers carry 17 significant digits so every value reads back to the
//! same `f64`; magnitudes below 1e-4 (including zero) use scientific
//! notation. Files use a header row and LF line endings.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: line {line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
}

pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v.abs() < 1e-4 {
        return format!("{v:.16e}");
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

/// A table of named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<(), OutputError> {
        let csv_err = |source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_number(v))).map_err(csv_err)?;
        }
        w.flush().map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, OutputError> {
        let csv_err = |source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let mut table = Self::new(r.headers().map_err(csv_err)?.iter());
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|e| OutputError::Format {
                        path: path.to_path_buf(),
                        line: line + 2,
                        message: format!("{field:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    let io_err = |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::create(path).map_err(io_err)?;
    f.write_all(text.as_bytes()).map_err(io_err)
}

pub fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
