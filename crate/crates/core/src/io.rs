//! File formats shared with the command line tool.
//!
//! Matrices travel as headerless CSV (one optional header row is tolerated on
//! read) and are written with 17 significant digits so that a write/read
//! round trip is bit-exact. Structured results are JSON.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linkage::Dendrogram;
use crate::symmat::SymMatrix;

/// Default asymmetry tolerance applied when reading a symmetric matrix.
pub const DEFAULT_ASYM_TOL: f64 = 1e-9;

/// Parses rows of comma-separated numbers. Blank lines are skipped.
pub fn read_rows<R: Read>(reader: R, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(|cell| cell.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}, column {}: {cell:?} is not a number", r + 1, c + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "ragged input: row {} has {} columns, expected {}",
                    r + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a square symmetric matrix, averaging `(i, j)` and `(j, i)`.
pub fn read_matrix<R: Read>(reader: R, header: bool, asym_tol: f64) -> Result<SymMatrix> {
    let rows = read_rows(reader, header)?;
    if rows.is_empty() {
        return Err(Error::Empty("matrix file"));
    }
    SymMatrix::from_dense(&rows, asym_tol)
}

pub fn read_matrix_file(path: &Path, header: bool, asym_tol: f64) -> Result<SymMatrix> {
    read_matrix(File::open(path).map_err(|e| io_err(path, e))?, header, asym_tol)
}

/// Reads an `n × p` vote matrix. Entries must be -1, 0 or +1 unless `general`.
pub fn read_votes<R: Read>(reader: R, header: bool, general: bool) -> Result<Vec<Vec<f64>>> {
    let rows = read_rows(reader, header)?;
    if rows.is_empty() {
        return Err(Error::Empty("vote file"));
    }
    if !general {
        for (r, row) in rows.iter().enumerate() {
            if let Some(c) = row.iter().position(|v| !matches!(*v, -1.0 | 0.0 | 1.0)) {
                return Err(Error::Parse(format!(
                    "row {}, column {}: vote {} is not -1, 0 or 1",
                    r + 1,
                    c + 1,
                    row[c]
                )));
            }
        }
    }
    Ok(rows)
}

pub fn read_votes_file(path: &Path, header: bool, general: bool) -> Result<Vec<Vec<f64>>> {
    read_votes(File::open(path).map_err(|e| io_err(path, e))?, header, general)
}

/// Writes the full `p × p` matrix, one row per line.
pub fn write_matrix<W: Write>(mut out: W, m: &SymMatrix) -> Result<()> {
    let p = m.dim();
    let mut line = String::new();
    for i in 0..p {
        line.clear();
        for j in 0..p {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_value(m.get(i, j)));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_matrix_file(path: &Path, m: &SymMatrix) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    write_matrix(std::io::BufWriter::new(f), m)
}

/// Writes a binary matrix as `0`/`1` cells.
pub fn write_binary_matrix<W: Write>(mut out: W, m: &SymMatrix) -> Result<()> {
    if !m.is_binary() {
        return Err(Error::InvalidParameter("matrix is not binary".into()));
    }
    let p = m.dim();
    for i in 0..p {
        let row: Vec<&str> = (0..p).map(|j| if m.get(i, j) == 1.0 { "1" } else { "0" }).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_binary_matrix_file(path: &Path, m: &SymMatrix) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    write_binary_matrix(std::io::BufWriter::new(f), m)
}

/// 17 significant digits; exact zeros stay short.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn dendrogram_to_json(d: &Dendrogram) -> Result<String> {
    to_json(d)
}

pub fn dendrogram_from_json(s: &str) -> Result<Dendrogram> {
    let d: Dendrogram = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    d.validate()?;
    Ok(d)
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json_file<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}
