//! JSON matrix files: `{"rows": r, "cols": c, "entries": [[re, im], ...]}`,
//! entries in row-major order.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{matrix_from_entries, ComplexMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "rows x cols = {} but {} entries given",
                self.rows * self.cols,
                self.entries.len()
            )));
        }
        let entries: Vec<Complex64> = self.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        matrix_from_entries(self.rows, self.cols, &entries)
    }
}

impl From<&ComplexMatrix> for MatrixFile {
    fn from(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text)?;
    file.to_matrix()
}

pub fn write_matrix(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    let text = serde_json::to_string_pretty(&MatrixFile::from(m))?;
    fs::write(path, text)?;
    Ok(())
}
