//! File emission helpers: atomic writes and the CSV shapes shared by the
//! commands.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use gsir_core::error::{Error, Result};

/// Write via a temporary sibling file and rename, so a crashed run never
/// leaves a half-written report behind.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Numeric matrix as CSV with headers `<prefix>1..<prefix>k`.
pub fn matrix_to_csv(prefix: &str, m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for j in 0..m.ncols() {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&format!("{prefix}{}", j + 1));
    }
    out.push('\n');
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Parse a CSV written by [`matrix_to_csv`]; the header is required but its
/// names are not enforced, so predictor/truth files from other tools load
/// too.
pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, column: 1, detail: "empty file".into() })?;
    let cols = header.split(',').count();
    if cols == 0 {
        return Err(Error::Parse { line: 1, column: 1, detail: "no columns".into() });
    }
    let mut data: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse {
                line: i + 1,
                column: fields.len().min(cols) + 1,
                detail: format!("expected {cols} fields, found {}", fields.len()),
            });
        }
        for (c, f) in fields.iter().enumerate() {
            data.push(f.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                column: c + 1,
                detail: format!("cannot parse {f:?} as a number"),
            })?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse { line: 2, column: 1, detail: "no data rows".into() });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Per-slice statistics across predictors, for external plotting.
pub fn slices_to_csv(cells: &[Vec<gsir_core::diagnostics::SliceCell>]) -> String {
    let mut out = String::from("predictor,cell,count,weight,mean,variance\n");
    for (j, per_pred) in cells.iter().enumerate() {
        for c in per_pred {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                j, c.cell, c.count, c.weight, c.mean, c.variance
            ));
        }
    }
    out
}

pub fn eigenvalues_to_csv(eigenvalues: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, v) in eigenvalues.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_csv_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.5, -2.0, 0.25, 1e-9, 3.0, -0.125]);
        let csv = matrix_to_csv("t", &m);
        assert!(csv.starts_with("t1,t2,t3\n"));
        let back = matrix_from_csv(&csv).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn matrix_csv_errors_carry_position() {
        match matrix_from_csv("a,b\n1,2\n3,x\n") {
            Err(Error::Parse { line: 3, column: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
