//! Plain CSV matrices and vectors: one row per line, no header.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

/// Formats a real with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn read_matrix<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("row {}: cannot parse {field:?} as a real", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("row {}: non-finite value {v}", line + 1)));
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DenseMatrix::from_row_slice(rows.len(), ncols, &flat))
}

/// Reads a vector stored either as a single column or a single row.
pub fn read_vector<R: Read>(reader: R) -> Result<DenseVector> {
    let m = read_matrix(reader)?;
    if m.ncols() == 1 {
        Ok(m.column(0).into_owned())
    } else if m.nrows() == 1 {
        Ok(m.row(0).transpose())
    } else {
        Err(Error::ShapeMismatch(format!(
            "expected a single row or column, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn read_matrix_file(path: &Path) -> Result<DenseMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_matrix(file).map_err(|e| annotate(e, path))
}

pub fn read_vector_file(path: &Path) -> Result<DenseVector> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_vector(file).map_err(|e| annotate(e, path))
}

fn annotate(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn write_matrix<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_real(v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_vector<W: Write>(mut w: W, v: &DenseVector) -> Result<()> {
    for &x in v.iter() {
        writeln!(w, "{}", fmt_real(x))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_matrix() {
        let m = read_matrix("1, 2.5\n-3e-2,4\n".as_bytes()).unwrap();
        assert_eq!(m, DenseMatrix::from_row_slice(2, 2, &[1.0, 2.5, -0.03, 4.0]));
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(matches!(read_matrix("1,2\n3\n".as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_garbage_and_empty() {
        assert!(read_matrix("1,abc\n".as_bytes()).is_err());
        assert!(read_matrix("".as_bytes()).is_err());
        assert!(read_matrix("nan\n".as_bytes()).is_err());
    }

    #[test]
    fn vector_row_or_column() {
        assert_eq!(read_vector("1\n2\n3\n".as_bytes()).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(read_vector("1,2,3\n".as_bytes()).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        assert!(read_vector("1,2\n3,4\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn matrix_text_round_trip_is_exact(
            rows in 1usize..5, cols in 1usize..5,
            vals in proptest::collection::vec(-1e12f64..1e12, 25),
        ) {
            let m = DenseMatrix::from_fn(rows, cols, |i, j| vals[i * 5 + j] * 1e-7);
            let mut buf = Vec::new();
            write_matrix(&mut buf, &m).unwrap();
            prop_assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
        }
    }
}
