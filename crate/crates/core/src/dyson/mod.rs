//! Interaction-picture Dyson terms by nested quadrature.
//!
//! The order-`k` term is
//!
//! ```text
//! (-i)^k e^{-iH0 t} ∫₀ᵗ dt₁ ∫₀^{t₁} dt₂ … ∫₀^{t_{k-1}} dt_k V(t₁) V(t₂) … V(t_k) ψ(0),
//! V(s) = e^{iH0 s} V e^{-iH0 s},
//! ```
//!
//! with later times always to the left. It is evaluated as the recursion
//! `u₀ = ψ(0)`, `u_j(s) = -i ∫₀^s V(r) u_{j-1}(r) dr` on one shared composite
//! Gauss–Legendre grid, so each order costs one pass over the grid.

mod quadrature;

use num_complex::Complex64;

use crate::block::{BlockSystem, ExpRoute};
use crate::error::{Error, Result};
use crate::operator::{self, ComplexMatrix, StateVector, UnperturbedSolution, DEFAULT_TOL};

pub use quadrature::{gauss_legendre, QuadratureScheme};

/// Highest Dyson order evaluated unless overridden.
pub const DEFAULT_DYSON_CAP: usize = 4;

#[derive(Debug, Clone)]
pub struct DysonOracle {
    sol: UnperturbedSolution,
    v: ComplexMatrix,
    v_eig: ComplexMatrix,
    scheme: QuadratureScheme,
    max_order: usize,
}

impl DysonOracle {
    pub fn new(sol: &UnperturbedSolution, v: &ComplexMatrix, scheme: QuadratureScheme) -> Result<Self> {
        let d = sol.dimension();
        if v.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "V is {:?} but H0 has dimension {d}",
                v.shape()
            )));
        }
        Ok(Self {
            sol: sol.clone(),
            v: v.clone(),
            v_eig: sol.in_eigenbasis(v),
            scheme,
            max_order: DEFAULT_DYSON_CAP,
        })
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    /// `V(t₁) = e^{iH0 t₁} V e^{-iH0 t₁}`.
    pub fn interaction_v(&self, t1: f64) -> ComplexMatrix {
        let e = self.sol.energies();
        let phased = ComplexMatrix::from_fn(e.len(), e.len(), |j, k| {
            self.v_eig[(j, k)] * Complex64::from_polar(1.0, (e[j] - e[k]) * t1)
        });
        self.sol.from_eigenbasis_operator(&phased)
    }

    /// Interaction-picture terms `u_1(t) … u_order(t)` (no `e^{-iH0 t}`
    /// prefactor), in the standard basis.
    pub fn interaction_terms(&self, psi0: &StateVector, t: f64, order: usize) -> Result<Vec<StateVector>> {
        if order > self.max_order {
            return Err(Error::OrderCap {
                order,
                cap: self.max_order,
            });
        }
        let d = self.sol.dimension();
        if psi0.len() != d {
            return Err(Error::Dimension(format!(
                "initial state has dimension {} but H0 has {d}",
                psi0.len()
            )));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite time {t}")));
        }
        operator::ensure_normalized(psi0, 1e-8)?;
        if order == 0 {
            return Ok(Vec::new());
        }

        let grid = self.scheme.grid(t);
        let points = grid.points();
        let energies = self.sol.energies();
        let forward: Vec<StateVector> = points
            .iter()
            .map(|&s| StateVector::from_iterator(d, energies.iter().map(|&e| Complex64::from_polar(1.0, e * s))))
            .collect();

        let c0 = self.sol.to_eigenbasis(psi0);
        let mut previous: Vec<StateVector> = vec![c0; grid.len()];
        let mut terms = Vec::with_capacity(order);
        let minus_i = Complex64::new(0.0, -1.0);
        for _ in 0..order {
            let integrand: Vec<StateVector> = previous
                .iter()
                .zip(&forward)
                .map(|(u, ph)| {
                    let back = u.zip_map(ph, |a, p| a * p.conj());
                    (&self.v_eig * back).zip_map(ph, |a, p| minus_i * a * p)
                })
                .collect();
            let (prefix, total) = grid.cumulative(&integrand);
            terms.push(self.sol.from_eigenbasis(&total));
            previous = prefix;
        }
        Ok(terms)
    }

    /// The order-`k` Dyson term including the `e^{-iH0 t}` prefactor.
    pub fn term(&self, psi0: &StateVector, t: f64, k: usize) -> Result<StateVector> {
        if k == 0 {
            return Err(Error::InvalidArgument("Dyson term order must be at least 1".into()));
        }
        let terms = self.interaction_terms(psi0, t, k)?;
        Ok(self.sol.evolve(&terms[k - 1], t))
    }

    /// Fixed probe set: every basis vector plus one spread-out complex vector.
    fn probes(&self) -> Vec<StateVector> {
        let d = self.sol.dimension();
        let mut probes: Vec<StateVector> = (0..d).map(|n| operator::basis_state(d, n).expect("n < d")).collect();
        let spread = StateVector::from_fn(d, |j, _| Complex64::from_polar(1.0, 0.7 * j as f64 + 0.3));
        probes.push(&spread / Complex64::from(spread.norm()));
        probes
    }

    /// Largest per-order disagreement between the quadrature terms and
    /// `e^{iH0 t} (e^{-iMt})_{1,k+1}` over the probe set, for `k = 1..=order`.
    pub fn identity_residual(&self, t: f64, order: usize) -> Result<f64> {
        if order > self.max_order {
            return Err(Error::OrderCap {
                order,
                cap: self.max_order,
            });
        }
        if order == 0 {
            return Ok(0.0);
        }
        let h0 = self.sol.reconstruct();
        let system = BlockSystem::assemble_with(
            &h0,
            &self.v,
            order,
            order,
            DEFAULT_TOL.max(1e-12 * operator::max_abs(&h0)),
        )?;
        let row = system.exponential_first_row(t, ExpRoute::Dense)?;
        let back = self.sol.propagator(-t);
        let mut worst = 0.0_f64;
        for probe in self.probes() {
            let quad = self.interaction_terms(&probe, t, order)?;
            for (k, q) in quad.iter().enumerate() {
                let block = &back * (&row[k + 1] * &probe);
                worst = worst.max((q - block).norm());
            }
        }
        Ok(worst)
    }
}

pub fn interaction_v(sol: &UnperturbedSolution, v: &ComplexMatrix, t1: f64) -> Result<ComplexMatrix> {
    Ok(DysonOracle::new(sol, v, QuadratureScheme::default())?.interaction_v(t1))
}

pub fn dyson_term(
    sol: &UnperturbedSolution,
    v: &ComplexMatrix,
    psi0: &StateVector,
    t: f64,
    k: usize,
    scheme: QuadratureScheme,
) -> Result<StateVector> {
    DysonOracle::new(sol, v, scheme)?.term(psi0, t, k)
}

pub fn dyson_identity_residual(
    sol: &UnperturbedSolution,
    v: &ComplexMatrix,
    t: f64,
    order: usize,
    scheme: QuadratureScheme,
) -> Result<f64> {
    DysonOracle::new(sol, v, scheme)?.identity_residual(t, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{basis_state, eigendecompose_hermitian, max_abs, FockSpec};
    use crate::oscillator::OscillatorProblem;
    use crate::sample;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&e| Complex64::from(e)),
        ))
    }

    fn sigma_x() -> ComplexMatrix {
        let mut v = ComplexMatrix::zeros(2, 2);
        v[(0, 1)] = Complex64::from(1.0);
        v[(1, 0)] = Complex64::from(1.0);
        v
    }

    #[test]
    fn interaction_v_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h0 = sample::random_hermitian(&mut rng, 4, 1.0);
        let v = sample::random_hermitian(&mut rng, 4, 1.0);
        let sol = eigendecompose_hermitian(&h0).unwrap();
        let oracle = DysonOracle::new(&sol, &v, QuadratureScheme::default()).unwrap();
        assert!(max_abs(&(oracle.interaction_v(0.0) - &v)) < 1e-13);
        for t1 in [0.3, 1.0, 7.5] {
            assert!((oracle.interaction_v(t1).norm() - v.norm()).abs() < 1e-12);
            let direct = sol.propagator(-t1) * &v * sol.propagator(t1);
            assert!(max_abs(&(oracle.interaction_v(t1) - direct)) < 1e-12);
        }
        // a perturbation commuting with H0 is time independent
        let commuting = &h0 * &h0 - &h0 * Complex64::from(0.5);
        let oracle = DysonOracle::new(&sol, &commuting, QuadratureScheme::default()).unwrap();
        assert!(max_abs(&(oracle.interaction_v(2.0) - &commuting)) < 1e-12);
    }

    #[test]
    fn zero_perturbation_gives_zero() {
        let sol = eigendecompose_hermitian(&diag(&[0.0, 1.0, 3.0])).unwrap();
        let psi = basis_state(3, 1).unwrap();
        let term = dyson_term(
            &sol,
            &ComplexMatrix::zeros(3, 3),
            &psi,
            2.0,
            1,
            QuadratureScheme::default(),
        )
        .unwrap();
        assert_eq!(term.norm(), 0.0);
    }

    #[test]
    fn two_level_first_order_matches_block_method() {
        let h0 = diag(&[0.0, 1.0]);
        let v = sigma_x();
        let sol = eigendecompose_hermitian(&h0).unwrap();
        let psi = basis_state(2, 0).unwrap();
        let quad = dyson_term(&sol, &v, &psi, 1.0, 1, QuadratureScheme::default()).unwrap();
        let block = BlockSystem::assemble(&h0, &v, 1).unwrap().evolve(&psi, 1.0).unwrap();
        assert!((quad - block.correction(1).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn oscillator_second_order_matches_block_method() {
        let p = OscillatorProblem::new(FockSpec::new(32, 1.0).unwrap(), 0.0).unwrap();
        let (h0, v) = p.hamiltonians();
        let sol = eigendecompose_hermitian(&h0).unwrap();
        let psi = basis_state(32, 0).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let quad = dyson_term(&sol, &v, &psi, t, 2, QuadratureScheme::default()).unwrap();
            let block = BlockSystem::assemble(&h0, &v, 2).unwrap().evolve(&psi, t).unwrap();
            let err = (quad - block.correction(2).unwrap()).norm();
            assert!(err < 1e-7, "t={t} err={err:e}");
        }
    }

    #[test]
    fn order_cap_and_zero_order() {
        let sol = eigendecompose_hermitian(&diag(&[0.0, 1.0])).unwrap();
        let oracle = DysonOracle::new(&sol, &sigma_x(), QuadratureScheme::default()).unwrap();
        let psi = basis_state(2, 0).unwrap();
        assert!(matches!(
            oracle.term(&psi, 1.0, 5),
            Err(Error::OrderCap { order: 5, cap: 4 })
        ));
        assert!(oracle.term(&psi, 1.0, 0).is_err());
        assert_eq!(oracle.identity_residual(1.0, 0).unwrap(), 0.0);
        let relaxed = oracle.clone().with_max_order(6);
        assert!(relaxed.term(&psi, 1.0, 5).is_ok());
    }

    #[test]
    fn identity_residual_on_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h0 = sample::random_hermitian(&mut rng, 3, 1.0);
        let v = sample::random_hermitian(&mut rng, 3, 1.0);
        let sol = eigendecompose_hermitian(&h0).unwrap();
        let r = dyson_identity_residual(&sol, &v, 2.0, 1, QuadratureScheme::new(64, 4).unwrap()).unwrap();
        assert!(r <= 1e-8, "residual {r:e}");
    }

    #[test]
    fn identity_residual_decreases_with_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h0 = sample::random_hermitian(&mut rng, 3, 2.0);
        let v = sample::random_hermitian(&mut rng, 3, 1.0);
        let sol = eigendecompose_hermitian(&h0).unwrap();
        let mut last = f64::INFINITY;
        for panels in [2, 4, 8, 16, 32] {
            let r = dyson_identity_residual(&sol, &v, 2.0, 2, QuadratureScheme::new(panels, 4).unwrap()).unwrap();
            assert!(r < last || r < 1e-12, "panels={panels}: {r:e} !< {last:e}");
            last = r;
        }
    }

    #[test]
    fn first_order_convergence_rate() {
        // k = 1 has the closed form -i Σ_k |k⟩ V_kn ∫ e^{i(E_k - E_n)s} ds; with
        // q-point Gauss panels the error falls like h^{2q}.
        let h0 = diag(&[0.0, 1.3, 2.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = sample::random_hermitian(&mut rng, 3, 1.0);
        let sol = eigendecompose_hermitian(&h0).unwrap();
        let psi = basis_state(3, 0).unwrap();
        let t = 3.0;
        let exact = StateVector::from_fn(3, |k, _| {
            let w = sol.energies()[k] - sol.energies()[0];
            let integral = if k == 0 {
                Complex64::from(t)
            } else {
                (Complex64::from_polar(1.0, w * t) - 1.0) / Complex64::new(0.0, w)
            };
            Complex64::new(0.0, -1.0) * v[(k, 0)] * integral
        });
        for q in [2usize, 3] {
            let err = |panels| {
                let oracle = DysonOracle::new(&sol, &v, QuadratureScheme::new(panels, q).unwrap()).unwrap();
                (&oracle.interaction_terms(&psi, t, 1).unwrap()[0] - &exact).norm()
            };
            let (coarse, fine) = (err(4), err(8));
            let expected = 2f64.powi(2 * q as i32);
            assert!(coarse / fine >= 0.5 * expected, "q={q}: ratio {}", coarse / fine);
        }
    }

    #[test]
    fn commuting_second_order_is_half_square() {
        // [V(t1), V(t2)] = 0 when V commutes with H0; then the time-ordered
        // second-order term is ½(-i∫V)² ψ.
        let h0 = diag(&[0.0, 1.0, 1.0, 2.0]);
        let mut v = diag(&[0.3, -0.2, 0.5, 0.1]);
        v[(1, 2)] = Complex64::new(0.4, 0.1);
        v[(2, 1)] = Complex64::new(0.4, -0.1);
        let sol = eigendecompose_hermitian(&h0).unwrap();
        let oracle = DysonOracle::new(&sol, &v, QuadratureScheme::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let psi = sample::random_state(&mut rng, 4);
        let t = 1.7;
        let u = oracle.interaction_terms(&psi, t, 2).unwrap();
        let integral = &v * Complex64::new(0.0, -t);
        let expected = &integral * (&integral * &psi) * Complex64::from(0.5);
        assert!((&u[1] - expected).norm() < 1e-12);
    }

    #[test]
    fn later_times_act_on_the_left() {
        // For non-commuting V(t) the reversed ordering gives a different answer.
        let h0 = diag(&[0.0, 1.0]);
        let mut v = sigma_x();
        v[(0, 0)] = Complex64::from(0.5);
        let sol = eigendecompose_hermitian(&h0).unwrap();
        let oracle = DysonOracle::new(&sol, &v, QuadratureScheme::default()).unwrap();
        let psi = basis_state(2, 0).unwrap();
        let t = 1.2;
        let ordered = &oracle.interaction_terms(&psi, t, 2).unwrap()[1];

        // brute-force double sum on a fine midpoint grid, both orderings
        let n = 800;
        let h = t / n as f64;
        let vs: Vec<ComplexMatrix> = (0..n).map(|i| oracle.interaction_v((i as f64 + 0.5) * h)).collect();
        let mut later_left = StateVector::zeros(2);
        let mut later_right = StateVector::zeros(2);
        for i in 0..n {
            for j in 0..i {
                later_left -= &vs[i] * (&vs[j] * &psi) * Complex64::from(h * h);
                later_right -= &vs[j] * (&vs[i] * &psi) * Complex64::from(h * h);
            }
            later_left -= &vs[i] * (&vs[i] * &psi) * Complex64::from(0.5 * h * h);
            later_right -= &vs[i] * (&vs[i] * &psi) * Complex64::from(0.5 * h * h);
        }
        assert!((ordered - &later_left).norm() < 1e-5);
        assert!((ordered - &later_right).norm() > 1e-2);
    }
}
