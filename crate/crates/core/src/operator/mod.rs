//! Dense complex operators: construction, validation, Hermitian
//! eigendecomposition and the matrix exponential.

mod eigen;
mod expm;
mod fock;
mod io;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eigen::{eigendecompose_hermitian, eigendecompose_hermitian_with_tol, UnperturbedSolution};
pub use expm::{expm, matrix_exp};
pub use fock::{
    annihilation, creation, ladder_down, ladder_up, number_operator, position_matrix, position_operator, FockSpec,
    TRUNCATION_MARGIN,
};
pub use io::{read_matrix, write_matrix, MatrixFile};

/// Every operator is a dense complex matrix.
pub type ComplexMatrix = DMatrix<Complex64>;

/// A state in the same basis as the operators acting on it.
pub type StateVector = DVector<Complex64>;

/// Default tolerance for Hermiticity, unitarity and normalization checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Builds a matrix from row-major entries, rejecting NaN and infinities.
pub fn matrix_from_entries(rows: usize, cols: usize, entries: &[Complex64]) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("matrix must be non-empty, got {rows}x{cols}")));
    }
    if entries.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{rows}x{cols} matrix needs {} entries, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = DMatrix::from_row_slice(rows, cols, entries);
    check_finite(&m)?;
    Ok(m)
}

pub fn check_finite(m: &ComplexMatrix) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

fn require_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Largest entrywise modulus of `m - m^H`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> Result<f64> {
    let n = require_square(m)?;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    Ok(worst)
}

/// True iff `max |m - m^H| <= tol` entrywise.
pub fn hermitize_check(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(hermitian_deviation(m)? <= tol)
}

pub(crate) fn ensure_hermitian(m: &ComplexMatrix, tol: f64, what: &'static str) -> Result<()> {
    let deviation = hermitian_deviation(m)?;
    if deviation > tol {
        return Err(Error::NotHermitian { what, deviation, tol });
    }
    Ok(())
}

pub(crate) fn ensure_normalized(psi: &StateVector, tol: f64) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > tol {
        return Err(Error::NotNormalized { norm, tol });
    }
    Ok(())
}

/// The `n`-th standard basis vector of a `dim`-dimensional space.
pub fn basis_state(dim: usize, n: usize) -> Result<StateVector> {
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    let mut v = StateVector::zeros(dim);
    v[n] = Complex64::new(1.0, 0.0);
    Ok(v)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_one(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum entrywise modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
