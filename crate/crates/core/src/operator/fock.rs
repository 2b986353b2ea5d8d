//! Truncated Fock-space operators for a unit-mass oscillator (ħ = 1).

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Levels probed by oscillator routines must satisfy `level + TRUNCATION_MARGIN <= dimension`.
///
/// Second-order quantities couple `n` to `n ± 4` through `n ± 2`; the margin
/// keeps those couplings and a two-level buffer inside the basis.
pub const TRUNCATION_MARGIN: usize = 6;

/// A truncated Fock space of `dimension` levels for an oscillator of angular
/// frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockSpec {
    dimension: usize,
    omega: f64,
}

impl FockSpec {
    pub fn new(dimension: usize, omega: f64) -> Result<Self> {
        if dimension < 4 {
            return Err(Error::InvalidArgument(format!(
                "Fock dimension must be at least 4, got {dimension}"
            )));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "oscillator frequency must be positive and finite, got {omega}"
            )));
        }
        Ok(Self { dimension, omega })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Rejects levels whose corrections would reach the truncation edge.
    pub fn guard_level(&self, level: usize) -> Result<()> {
        if level + TRUNCATION_MARGIN > self.dimension {
            return Err(Error::Truncation {
                level,
                dim: self.dimension,
                margin: TRUNCATION_MARGIN,
            });
        }
        Ok(())
    }

    /// `<n|(a + s a†)^2|m>` with exact (untruncated) matrix elements, `s = ±1`.
    ///
    /// Squaring the truncated `a + s a†` would corrupt the last diagonal
    /// entry; building the square from its matrix elements keeps the
    /// projection exact.
    pub(crate) fn quadrature_squared(&self, sign: f64) -> ComplexMatrix {
        let d = self.dimension;
        let mut m = ComplexMatrix::zeros(d, d);
        for n in 0..d {
            let nf = n as f64;
            m[(n, n)] = Complex64::from(sign * (2.0 * nf + 1.0));
            if n + 2 < d {
                let amp = ((nf + 1.0) * (nf + 2.0)).sqrt();
                m[(n, n + 2)] = Complex64::from(amp);
                m[(n + 2, n)] = Complex64::from(amp);
            }
        }
        m
    }

    /// Projection of `x²`, i.e. `(a + a†)² / (2ω)` with exact matrix elements.
    pub fn position_squared(&self) -> ComplexMatrix {
        self.quadrature_squared(1.0) / Complex64::from(2.0 * self.omega)
    }

    /// Projection of `p²`, i.e. `-(ω/2)(a - a†)²` with exact matrix elements.
    pub fn momentum_squared(&self) -> ComplexMatrix {
        self.quadrature_squared(-1.0) * Complex64::from(-0.5 * self.omega)
    }
}

/// Truncated annihilation operator: `a[i-1, i] = √i`.
pub fn annihilation(dim: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(dim, dim);
    for i in 1..dim {
        a[(i - 1, i)] = Complex64::from((i as f64).sqrt());
    }
    a
}

pub fn creation(dim: usize) -> ComplexMatrix {
    annihilation(dim).adjoint()
}

/// Diagonal number operator `diag(0, 1, …, d-1)`.
pub fn number_operator(dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| Complex64::from(i as f64)))
}

/// `(a + a†) / √(2ω)` in a `dim`-level space.
pub fn position_matrix(dim: usize, omega: f64) -> ComplexMatrix {
    let a = annihilation(dim);
    (&a + a.adjoint()) / Complex64::from((2.0 * omega).sqrt())
}

pub fn ladder_down(spec: &FockSpec) -> ComplexMatrix {
    annihilation(spec.dimension)
}

pub fn ladder_up(spec: &FockSpec) -> ComplexMatrix {
    creation(spec.dimension)
}

pub fn position_operator(spec: &FockSpec) -> ComplexMatrix {
    position_matrix(spec.dimension, spec.omega)
}
