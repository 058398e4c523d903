//! Matrix Market I/O: coordinate format for sparse matrices, and either
//! array or coordinate format for dense vectors.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    layout: Layout,
    symmetry: Symmetry,
}

fn parse_header(line: &str) -> Result<Header> {
    let tokens: Vec<String> = line
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Format(format!("bad Matrix Market banner: {line:?}")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(Error::Format(format!("unsupported layout {other:?}"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(Error::Format(format!("unsupported field {other:?}"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::Format(format!("unsupported symmetry {other:?}"))),
    };
    Ok(Header { layout, symmetry })
}

/// Splits file contents into the banner and the data lines (comments and
/// blank lines removed).
fn split_lines(text: &str) -> Result<(Header, Vec<&str>)> {
    let mut lines = text.lines();
    let banner = lines
        .next()
        .ok_or_else(|| Error::Format("empty Matrix Market file".into()))?;
    let header = parse_header(banner)?;
    let data = lines
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .collect();
    Ok((header, data))
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Format(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Format(format!("invalid {what}")))
}

fn parse_f64(tok: Option<&str>, what: &str) -> Result<f64> {
    let v: f64 = tok
        .ok_or_else(|| Error::Format(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Format(format!("invalid {what}")))?;
    if !v.is_finite() {
        return Err(Error::Format(format!("non-finite {what}")));
    }
    Ok(v)
}

/// Reads a sparse matrix; symmetric storage is expanded to the full pattern.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let text = fs::read_to_string(path)?;
    let (header, data) = split_lines(&text)?;
    let mut data = data.into_iter();
    let size = data
        .next()
        .ok_or_else(|| Error::Format("missing size line".into()))?;
    let mut tok = size.split_whitespace();
    let n_rows = parse_usize(tok.next(), "row count")?;
    let n_cols = parse_usize(tok.next(), "column count")?;

    let mut triplets = Vec::new();
    match header.layout {
        Layout::Coordinate => {
            let nnz = parse_usize(tok.next(), "entry count")?;
            for _ in 0..nnz {
                let line = data
                    .next()
                    .ok_or_else(|| Error::Format("fewer entries than declared".into()))?;
                let mut t = line.split_whitespace();
                let r = parse_usize(t.next(), "row index")?;
                let c = parse_usize(t.next(), "column index")?;
                let v = parse_f64(t.next(), "value")?;
                if r == 0 || c == 0 || r > n_rows || c > n_cols {
                    return Err(Error::Format(format!("entry ({r}, {c}) out of range")));
                }
                triplets.push((r - 1, c - 1, v));
                if header.symmetry == Symmetry::Symmetric && r != c {
                    triplets.push((c - 1, r - 1, v));
                }
            }
        }
        Layout::Array => {
            let values: Vec<f64> = data
                .flat_map(str::split_whitespace)
                .map(|t| parse_f64(Some(t), "value"))
                .collect::<Result<_>>()?;
            // Column-major; symmetric arrays store the lower triangle only.
            let mut it = values.into_iter();
            for c in 0..n_cols {
                let start = if header.symmetry == Symmetry::Symmetric {
                    c
                } else {
                    0
                };
                for r in start..n_rows {
                    let v = it
                        .next()
                        .ok_or_else(|| Error::Format("array data shorter than declared".into()))?;
                    triplets.push((r, c, v));
                    if header.symmetry == Symmetry::Symmetric && r != c {
                        triplets.push((c, r, v));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &triplets)
}

/// Writes `m` in coordinate general format with round-trip precision.
pub fn write_matrix(path: impl AsRef<Path>, m: &CsrMatrix) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (r, c, v) in m.triplets() {
        writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a vector stored as an `n x 1` (or `1 x n`) array or coordinate matrix.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    let m = match (m.n_rows(), m.n_cols()) {
        (_, 1) => m,
        (1, _) => m.transpose(),
        (r, c) => return Err(Error::Format(format!("expected a vector, found {r}x{c}"))),
    };
    Ok((0..m.n_rows()).map(|i| m.get(i, 0)).collect())
}

/// Writes a vector in array format.
pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for x in v {
        writeln!(w, "{x:.17e}")?;
    }
    w.flush()?;
    Ok(())
}
