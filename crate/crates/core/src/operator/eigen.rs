use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{ensure_hermitian, max_abs, ComplexMatrix, StateVector, DEFAULT_TOL};
use crate::error::{Error, Result};

/// Eigenpairs `(E_n, |n⟩)` of a Hermitian operator, energies ascending.
///
/// Each eigenvector's phase is fixed so that its largest component is real
/// and positive, which makes the decomposition of a diagonal matrix the
/// standard basis.
#[derive(Debug, Clone)]
pub struct UnperturbedSolution {
    energies: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

pub fn eigendecompose_hermitian(m: &ComplexMatrix) -> Result<UnperturbedSolution> {
    eigendecompose_hermitian_with_tol(m, DEFAULT_TOL)
}

/// Hermitian eigendecomposition; `tol` bounds both the Hermiticity of the
/// input and the relative reconstruction residual `‖HU - UE‖`.
pub fn eigendecompose_hermitian_with_tol(m: &ComplexMatrix, tol: f64) -> Result<UnperturbedSolution> {
    ensure_hermitian(m, tol, "matrix to diagonalize")?;
    let n = m.nrows();
    // symmetrize so the solver sees an exactly Hermitian input
    let h = (m + m.adjoint()) * Complex64::from(0.5);
    let eig = SymmetricEigen::new(h.clone());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = v
            .iter()
            .find(|z| z.norm() >= peak * (1.0 - 1e-12))
            .copied()
            .unwrap_or(Complex64::from(1.0));
        let phase = pivot.conj() / pivot.norm();
        eigenvectors.set_column(col, &(v * phase));
    }

    let sol = UnperturbedSolution { energies, eigenvectors };
    let scale = max_abs(&h).max(1.0);
    let residual = sol.residual(&h);
    if residual > tol * scale {
        return Err(Error::Numerical(format!(
            "eigendecomposition residual {residual:e} exceeds {:e}",
            tol * scale
        )));
    }
    Ok(sol)
}

impl UnperturbedSolution {
    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, n: usize) -> Result<f64> {
        self.energies.get(n).copied().ok_or(Error::IndexOutOfRange {
            index: n,
            dim: self.dimension(),
        })
    }

    /// Unitary matrix whose columns are the eigenvectors.
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, n: usize) -> Result<StateVector> {
        if n >= self.dimension() {
            return Err(Error::IndexOutOfRange {
                index: n,
                dim: self.dimension(),
            });
        }
        Ok(self.eigenvectors.column(n).into_owned())
    }

    pub fn spectral_range(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// `U diag(E) U†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = DVector::from_iterator(self.dimension(), self.energies.iter().map(|&e| Complex64::from(e)));
        &self.eigenvectors * ComplexMatrix::from_diagonal(&d) * self.eigenvectors.adjoint()
    }

    /// Max entry of `H U - U diag(E)`.
    pub fn residual(&self, h: &ComplexMatrix) -> f64 {
        let mut r = h * &self.eigenvectors;
        for (j, &e) in self.energies.iter().enumerate() {
            let col = self.eigenvectors.column(j) * Complex64::from(e);
            let mut target = r.column_mut(j);
            target -= col;
        }
        max_abs(&r)
    }

    /// Phases `e^{-i E_n t}`.
    pub fn phases(&self, t: f64) -> DVector<Complex64> {
        DVector::from_iterator(
            self.dimension(),
            self.energies.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        )
    }

    /// `exp(-i H t)` through the eigenbasis.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, p) in self.phases(t).iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= *p;
        }
        scaled * u.adjoint()
    }

    /// `exp(-i H t) ψ`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> StateVector {
        let coeffs = self.to_eigenbasis(psi).component_mul(&self.phases(t));
        self.from_eigenbasis(&coeffs)
    }

    /// Coefficients `⟨n|ψ⟩`.
    pub fn to_eigenbasis(&self, psi: &StateVector) -> StateVector {
        self.eigenvectors.ad_mul(psi)
    }

    /// `Σ_n c_n |n⟩`.
    pub fn from_eigenbasis(&self, coeffs: &StateVector) -> StateVector {
        &self.eigenvectors * coeffs
    }

    /// Matrix elements `⟨k|op|n⟩`.
    pub fn in_eigenbasis(&self, op: &ComplexMatrix) -> ComplexMatrix {
        self.eigenvectors.adjoint() * op * &self.eigenvectors
    }

    pub fn from_eigenbasis_operator(&self, op: &ComplexMatrix) -> ComplexMatrix {
        &self.eigenvectors * op * self.eigenvectors.adjoint()
    }
}
