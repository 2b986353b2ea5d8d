//! Harmonic oscillator with a quadratic perturbation,
//! `H0 = ½(p² + ω²x²)`, `V = ½ω²x²`, so that `H0 + λV = ½(p² + ω̃²x²)` with
//! `ω̃ = ω√(1+λ)`. Its exact evolution is known in closed form through the
//! squeeze operator `S(λ) = exp{(ln(1+λ)/8)(a² - a†²)}`:
//!
//! ```text
//! ψ(t) = e^{-itω̃(a†a + ½)} S_ω̃(λ, t) S†(λ) ψ(0),
//! S_ω̃(λ, t) = exp{(ln(1+λ)/8)(e^{-2itω̃} a² - e^{2itω̃} a†²)}.
//! ```
//!
//! The authoritative exact propagator diagonalizes the truncated `H0 + λV`;
//! the squeeze factorization is kept as an independent second route.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{
    self, annihilation, eigendecompose_hermitian, number_operator, ComplexMatrix, FockSpec, StateVector,
};

/// Support below this magnitude counts as empty for the truncation guard.
const SUPPORT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorProblem {
    spec: FockSpec,
    lambda: f64,
    tilde_omega: f64,
}

impl OscillatorProblem {
    pub fn new(spec: FockSpec, lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda.abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "perturbation strength must satisfy |λ| < 1, got {lambda}"
            )));
        }
        Ok(Self {
            spec,
            lambda,
            tilde_omega: spec.omega() * (1.0 + lambda).sqrt(),
        })
    }

    pub fn spec(&self) -> &FockSpec {
        &self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ω̃ = ω√(1+λ)`.
    pub fn tilde_omega(&self) -> f64 {
        self.tilde_omega
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.spec, lambda)
    }

    /// `(H0, V)` in the Fock basis.
    pub fn hamiltonians(&self) -> (ComplexMatrix, ComplexMatrix) {
        let d = self.spec.dimension();
        let omega = self.spec.omega();
        let h0 = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::from(omega * (i as f64 + 0.5))
            } else {
                Complex64::from(0.0)
            }
        });
        let v = self.spec.position_squared() * Complex64::from(0.5 * omega * omega);
        (h0, v)
    }

    /// `H0 + λV`.
    pub fn full_hamiltonian(&self) -> ComplexMatrix {
        let (h0, v) = self.hamiltonians();
        h0 + v * Complex64::from(self.lambda)
    }

    fn squeeze_strength(&self) -> f64 {
        (1.0 + self.lambda).ln() / 8.0
    }

    /// `S(λ) = exp{(ln(1+λ)/8)(a² - a†²)}`.
    pub fn squeeze_operator(&self) -> Result<ComplexMatrix> {
        self.time_dependent_squeeze(0.0)
    }

    /// `S_ω̃(λ, t) = e^{itω̃(a†a+½)} S(λ) e^{-itω̃(a†a+½)}`.
    pub fn time_dependent_squeeze(&self, t: f64) -> Result<ComplexMatrix> {
        let d = self.spec.dimension();
        let a = annihilation(d);
        let a2 = &a * &a;
        let ad2 = a2.adjoint();
        let phase = Complex64::from_polar(1.0, -2.0 * t * self.tilde_omega);
        let generator = a2 * phase - ad2 * phase.conj();
        operator::matrix_exp(&generator, Complex64::from(self.squeeze_strength()))
    }

    fn guard_support(&self, psi: &StateVector) -> Result<()> {
        let d = self.spec.dimension();
        if psi.len() != d {
            return Err(Error::Dimension(format!(
                "state has dimension {} but the Fock space has {d}",
                psi.len()
            )));
        }
        if let Some(level) = (0..d).rev().find(|&n| psi[n].norm() > SUPPORT_EPS) {
            self.spec.guard_level(level)?;
        }
        Ok(())
    }

    /// `e^{-iH_ω̃ t} ψ(0)` by diagonalizing the truncated `H0 + λV`.
    pub fn exact_evolve(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        self.guard_support(psi0)?;
        let sol = eigendecompose_hermitian(&self.full_hamiltonian())?;
        Ok(sol.evolve(psi0, t))
    }

    /// The same evolution through `e^{-itω̃(a†a+½)} S_ω̃(λ,t) S†(λ)`.
    pub fn exact_evolve_factored(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        self.guard_support(psi0)?;
        let d = self.spec.dimension();
        let unsqueezed = self.squeeze_operator()?.adjoint() * psi0;
        let rotated = self.time_dependent_squeeze(t)? * unsqueezed;
        let free = StateVector::from_fn(d, |n, _| {
            Complex64::from_polar(1.0, -t * self.tilde_omega * (n as f64 + 0.5))
        });
        Ok(rotated.component_mul(&free))
    }

    /// The closed-form λ-free first-order correction for `ψ(0) = |n⟩`:
    ///
    /// ```text
    /// e^{-iE_n t}[√(n(n-1))/8 |n-2⟩ - √((n+1)(n+2))/8 |n+2⟩ - i t ω(2n+1)/4 |n⟩]
    ///   - e^{-iE_{n-2} t} √(n(n-1))/8 |n-2⟩ + e^{-iE_{n+2} t} √((n+1)(n+2))/8 |n+2⟩
    /// ```
    pub fn first_order_reference(&self, n: usize, t: f64) -> Result<StateVector> {
        self.spec.guard_level(n)?;
        let d = self.spec.dimension();
        let omega = self.spec.omega();
        let energy = |k: usize| omega * (k as f64 + 0.5);
        let nf = n as f64;
        let phase_n = Complex64::from_polar(1.0, -energy(n) * t);
        let mut psi = StateVector::zeros(d);
        psi[n] = phase_n * Complex64::new(0.0, -t * omega * (2.0 * nf + 1.0) / 4.0);
        if n >= 2 {
            let c = (nf * (nf - 1.0)).sqrt() / 8.0;
            psi[n - 2] = (phase_n - Complex64::from_polar(1.0, -energy(n - 2) * t)) * c;
        }
        let c = ((nf + 1.0) * (nf + 2.0)).sqrt() / 8.0;
        psi[n + 2] = (Complex64::from_polar(1.0, -energy(n + 2) * t) - phase_n) * c;
        Ok(psi)
    }

    /// The first-order operator
    /// `e^{-itH0}[(a†²(1 - e^{2iωt}) + a²(e^{-2iωt} - 1))/8 - (itω/2)(a†a + ½)]`
    /// obtained by expanding the squeeze factorization to first order in λ.
    pub fn first_order_operator(&self, t: f64) -> ComplexMatrix {
        let d = self.spec.dimension();
        let omega = self.spec.omega();
        let a = annihilation(d);
        let a2 = &a * &a;
        let ad2 = a2.adjoint();
        let one = Complex64::from(1.0);
        let up = one - Complex64::from_polar(1.0, 2.0 * omega * t);
        let down = Complex64::from_polar(1.0, -2.0 * omega * t) - one;
        let shifted_number = number_operator(d) + ComplexMatrix::identity(d, d) * Complex64::from(0.5);
        let bracket =
            (ad2 * up + a2 * down) * Complex64::from(0.125) - shifted_number * Complex64::new(0.0, 0.5 * t * omega);
        let (h0, _) = self.hamiltonians();
        let free = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, -h0[(i, i)].re * t)
            } else {
                Complex64::from(0.0)
            }
        });
        free * bracket
    }

    /// λ-free second-order correction by the central second difference of
    /// the exact evolution in λ: `(ψ(h) - 2ψ(0) + ψ(-h)) / (2h²)`.
    pub fn second_order_by_differentiation(&self, psi0: &StateVector, t: f64, step: f64) -> Result<StateVector> {
        let plus = self.with_lambda(step)?.exact_evolve(psi0, t)?;
        let zero = self.with_lambda(0.0)?.exact_evolve(psi0, t)?;
        let minus = self.with_lambda(-step)?.exact_evolve(psi0, t)?;
        Ok((plus - zero * Complex64::from(2.0) + minus) / Complex64::from(2.0 * step * step))
    }

    /// Annihilation operator of the perturbed mode,
    /// `A = √(ω̃/2) x + i p / √(2ω̃)`, from the truncated `x` and `p`.
    #[cfg(test)]
    fn perturbed_annihilation(&self) -> ComplexMatrix {
        let d = self.spec.dimension();
        let omega = self.spec.omega();
        let a = annihilation(d);
        let ad = operator::creation(d);
        let x = (&a + &ad) / Complex64::from((2.0 * omega).sqrt());
        let p = (&ad - &a) * Complex64::new(0.0, (omega / 2.0).sqrt());
        x * Complex64::from((self.tilde_omega / 2.0).sqrt())
            + p * Complex64::new(0.0, 1.0 / (2.0 * self.tilde_omega).sqrt())
    }
}
