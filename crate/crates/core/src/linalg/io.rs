//! Plain-text matrix exchange: a `rows cols` header line, then one row per line with
//! whitespace-separated values at 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Formats a value with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_string(m: &DenseMatrix) -> String {
    let mut s = String::with_capacity(m.rows() * m.cols() * 24 + 16);
    writeln!(s, "{} {}", m.rows(), m.cols()).unwrap();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| fmt_f64(m.get(i, j))).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn matrix_from_str(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("matrix", "empty input"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::parse("matrix header", e.to_string()))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::parse("matrix header", format!("expected `rows cols`, got `{header}`")));
    };
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse("matrix", format!("missing row {i}")))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::parse(format!("matrix row {i}"), e.to_string()))?;
        if vals.len() != cols {
            return Err(Error::parse(
                format!("matrix row {i}"),
                format!("expected {cols} values, got {}", vals.len()),
            ));
        }
        for (j, v) in vals.into_iter().enumerate() {
            m.set(i, j, v);
        }
    }
    if lines.next().is_some() {
        return Err(Error::parse("matrix", "trailing data after last row"));
    }
    Ok(m)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix_to_string(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    matrix_from_str(&text)
}
