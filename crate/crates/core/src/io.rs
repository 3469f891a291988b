//! Plain-text matrix dumps.
//!
//! Format: a header line `rows,cols` with the two dimensions, followed by one
//! comma-separated line per matrix row. Values use Rust's shortest round-trip
//! decimal formatting, so a write/read cycle reproduces every bit.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut s = format!("{},{}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn matrix_from_csv(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("bad header {header:?}: {e}")))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("header must be `rows,cols`, got {header:?}")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        let before = data.len();
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("row {i}: bad value {tok:?}: {e}")))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(Error::Parse(format!(
                "row {i} has {} values, expected {cols}",
                data.len() - before
            )));
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Parse(format!(
            "expected {rows} rows, found {}",
            data.len() / cols.max(1)
        )));
    }
    Ok(Matrix::from_row_slice(rows, cols, &data))
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(matrix_to_csv(m).as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    matrix_from_csv(&fs::read_to_string(path)?)
}

/// Vectors are stored as single-column matrices.
pub fn write_vector_csv(path: &Path, v: &Vector) -> Result<()> {
    write_matrix_csv(path, &Matrix::from_column_slice(v.len(), 1, v.as_slice()))
}

pub fn read_vector_csv(path: &Path) -> Result<Vector> {
    let m = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(Error::Parse(format!("expected a single column, got {}", m.ncols())));
    }
    Ok(Vector::from_column_slice(m.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let m = Matrix::from_row_slice(2, 3, &[1.0, 2.5, -3.0, 0.1, 0.0, 1e-300]);
        let text = matrix_to_csv(&m);
        assert!(text.starts_with("2,3\n1.0,2.5,-3.0\n"));
        assert_eq!(matrix_from_csv(&text).unwrap(), m);
    }

    #[test]
    fn malformed_input() {
        assert!(matrix_from_csv("").is_err());
        assert!(matrix_from_csv("2,2\n1,2\n3\n").is_err());
        assert!(matrix_from_csv("2,2\n1,2\n").is_err());
        assert!(matrix_from_csv("x,2\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            let mut rng = crate::seeding::rng(seed);
            let m = crate::seeding::gaussian_matrix(rows, cols, &mut rng) * 1e3;
            let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
            prop_assert!(back.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
