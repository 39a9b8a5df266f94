//! Table serialization: CSV with a header row, or JSONL with one record per
//! row carrying the same fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Output encoding for data tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

/// One table cell.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    U64(u64),
    I64(i64),
    F64(f64),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U64(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I64(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F64(v)
    }
}

/// Floats carry 17 significant digits so a round trip through text is exact.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn cell_to_csv(cell: &Cell) -> String {
    match cell {
        Cell::U64(v) => v.to_string(),
        Cell::I64(v) => v.to_string(),
        Cell::F64(v) => format_float(*v),
    }
}

fn cell_to_json(cell: &Cell) -> serde_json::Value {
    match cell {
        Cell::U64(v) => serde_json::json!(v),
        Cell::I64(v) => serde_json::json!(v),
        Cell::F64(v) => {
            if v.is_finite() {
                serde_json::json!(v)
            } else {
                serde_json::json!(format_float(*v))
            }
        }
    }
}

/// A column-ordered table written as one output file.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Write under `dir` as `<stem>.<ext>`; returns the path written.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let file = File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        match format {
            Format::Csv => {
                writeln!(w, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(cell_to_csv).collect();
                    writeln!(w, "{}", line.join(","))?;
                }
            }
            Format::Jsonl => {
                for row in &self.rows {
                    let record: serde_json::Map<String, serde_json::Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(&c, cell)| (c.to_string(), cell_to_json(cell)))
                        .collect();
                    writeln!(w, "{}", serde_json::Value::Object(record))?;
                }
            }
        }
        w.flush()?;
        Ok(path)
    }
}
