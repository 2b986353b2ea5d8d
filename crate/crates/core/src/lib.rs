//! Time-dependent perturbation theory through block matrix exponentials.
//!
//! For a Hamiltonian `H0 + λV` the order-`k` correction to an evolving state
//! is the `(1, k+1)` block of `exp(-iMt)` applied to the initial state, where
//! `M` is the block upper-bidiagonal matrix with `H0` on the diagonal and `V`
//! on the superdiagonal. This crate assembles `M`, exponentiates it, and
//! provides three independent checks of the result:
//!
//! * [`rspt`]: stationary Rayleigh–Schrödinger corrections and the
//!   time-dependent terms that accompany them,
//! * [`dyson`]: nested time-ordered integrals evaluated by composite
//!   Gauss–Legendre quadrature,
//! * [`oscillator`]: the quadratically perturbed harmonic oscillator, whose
//!   exact evolution is a squeeze.
//!
//! Every operator lives in a finite (possibly truncated) basis and is a dense
//! complex matrix.

pub mod block;
pub mod dyson;
pub mod error;
pub mod operator;
pub mod oscillator;
pub mod rspt;
pub mod sample;

pub use block::{BlockSystem, CorrectionSeries, ExpRoute, DEFAULT_MAX_ORDER};
pub use dyson::{DysonOracle, QuadratureScheme, DEFAULT_DYSON_CAP};
pub use error::{Error, Result};
pub use operator::{
    eigendecompose_hermitian, hermitize_check, matrix_exp, ComplexMatrix, FockSpec, MatrixFile, StateVector,
    UnperturbedSolution, DEFAULT_TOL,
};
pub use oscillator::OscillatorProblem;
pub use rspt::{RsCorrections, TimeDependentTerms};

pub use num_complex::Complex64;
