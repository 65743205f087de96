//! Plot-ready CSV series.
//!
//! Real values are written as `{:.16e}` (17 significant digits), which parses back
//! to the same `f64`; undefined entries are written as `NaN`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Int(u64),
    Real(f64),
    Text(String),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Real(v) => format_real(*v),
            Field::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as u64)
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Real(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Text(v)
    }
}

pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Write `rows` under the `schema` header. Every row must have as many fields as
/// the schema; this is checked before the file is created.
pub fn write_series_csv(path: &Path, schema: &[&str], rows: &[Vec<Field>]) -> Result<()> {
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != schema.len()) {
        return Err(Error::Dimension(format!(
            "row {i} has {} fields, schema {:?} has {}",
            row.len(),
            schema,
            schema.len()
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let io_err = |e: csv::Error| Error::input(path, e.to_string());
    w.write_record(schema).map_err(io_err)?;
    for row in rows {
        w.write_record(row.iter().map(Field::render)).map_err(io_err)?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::input(path, e.to_string()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// Header and raw records of a CSV file.
pub fn read_series_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::input(path, e.to_string()))?;
    let header = r
        .headers()
        .map_err(|e| Error::input(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| Error::input(path, e.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// The column `name` of a CSV file parsed as reals.
pub fn read_real_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let (header, rows) = read_series_csv(path)?;
    let j = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::input(path, format!("no column `{name}`")))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r[j].parse::<f64>()
                .map_err(|e| Error::input(path, format!("row {i}, column `{name}`: {e}")))
        })
        .collect()
}
