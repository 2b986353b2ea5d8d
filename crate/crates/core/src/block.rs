//! The block matrix
//!
//! ```text
//!     ┌ H0  V          ┐
//!     │     H0  V      │
//! M = │         ⋱   ⋱  │      (order + 1) × (order + 1) blocks
//!     │             V  │
//!     └             H0 ┘
//! ```
//!
//! and perturbative evolution read off its exponential: the `(1, k+1)` block
//! of `exp(-iMt)` applied to `ψ(0)` is the λ-free order-`k` correction to
//! `exp(-i(H0 + λV)t) ψ(0)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{self, ComplexMatrix, StateVector, DEFAULT_TOL};

/// Largest order accepted by [`BlockSystem::assemble`].
///
/// The dense exponential costs `O(((m+1)d)^3)`.
pub const DEFAULT_MAX_ORDER: usize = 8;

/// How the first block row of `exp(-iMt)` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpRoute {
    /// Padé scaling and squaring on the full `(m+1)d` matrix.
    #[default]
    Dense,
    /// Scaling and squaring inside the algebra of block upper-triangular
    /// Toeplitz matrices, which only ever stores `m+1` blocks.
    Structured,
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    order: usize,
    base_dim: usize,
    matrix: ComplexMatrix,
    h0: ComplexMatrix,
    v: ComplexMatrix,
    tol: f64,
}

impl BlockSystem {
    pub fn assemble(h0: &ComplexMatrix, v: &ComplexMatrix, order: usize) -> Result<Self> {
        Self::assemble_with(h0, v, order, DEFAULT_MAX_ORDER, DEFAULT_TOL)
    }

    /// Assembles `M` for the given order; `tol` bounds the Hermiticity of the
    /// inputs and the normalization of initial states passed to `evolve`.
    pub fn assemble_with(
        h0: &ComplexMatrix,
        v: &ComplexMatrix,
        order: usize,
        max_order: usize,
        tol: f64,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("block order must be at least 1".into()));
        }
        if order > max_order {
            return Err(Error::OrderCap { order, cap: max_order });
        }
        if h0.shape() != v.shape() {
            return Err(Error::Dimension(format!(
                "H0 is {:?} but V is {:?}",
                h0.shape(),
                v.shape()
            )));
        }
        operator::ensure_hermitian(h0, tol, "H0")?;
        operator::ensure_hermitian(v, tol, "V")?;
        operator::check_finite(h0)?;
        operator::check_finite(v)?;

        let d = h0.nrows();
        let n = (order + 1) * d;
        let mut matrix = ComplexMatrix::zeros(n, n);
        for i in 0..=order {
            matrix.view_mut((i * d, i * d), (d, d)).copy_from(h0);
            if i < order {
                matrix.view_mut((i * d, (i + 1) * d), (d, d)).copy_from(v);
            }
        }
        Ok(Self {
            order,
            base_dim: d,
            matrix,
            h0: h0.clone(),
            v: v.clone(),
            tol,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    /// The `(row, col)` block of `M`, 1-based.
    pub fn block(&self, row: usize, col: usize) -> Result<ComplexMatrix> {
        let blocks = self.order + 1;
        for idx in [row, col] {
            if idx == 0 || idx > blocks {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    dim: blocks,
                });
            }
        }
        let d = self.base_dim;
        Ok(self.matrix.view(((row - 1) * d, (col - 1) * d), (d, d)).into_owned())
    }

    /// The `(1, col)` block of `M^n` by repeated block multiplication.
    ///
    /// This deliberately avoids the exponential so it can serve as an
    /// independent check of the power identities.
    pub fn power_entry(&self, n: usize, col: usize) -> Result<ComplexMatrix> {
        let blocks = self.order + 1;
        if col == 0 || col > blocks {
            return Err(Error::IndexOutOfRange {
                index: col,
                dim: blocks,
            });
        }
        let d = self.base_dim;
        let mut row: Vec<ComplexMatrix> = (0..blocks)
            .map(|j| {
                if j == 0 {
                    ComplexMatrix::identity(d, d)
                } else {
                    ComplexMatrix::zeros(d, d)
                }
            })
            .collect();
        for _ in 0..n {
            // (R M)_j = R_j H0 + R_{j-1} V
            let next: Vec<ComplexMatrix> = (0..blocks)
                .map(|j| {
                    let mut b = &row[j] * &self.h0;
                    if j > 0 {
                        b += &row[j - 1] * &self.v;
                    }
                    b
                })
                .collect();
            row = next;
        }
        Ok(row.swap_remove(col - 1))
    }

    /// Blocks `(1,1) … (1, order+1)` of `exp(-iMt)`.
    pub fn exponential_first_row(&self, t: f64, route: ExpRoute) -> Result<Vec<ComplexMatrix>> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite time {t}")));
        }
        match route {
            ExpRoute::Dense => {
                let e = operator::matrix_exp(&self.matrix, Complex64::new(0.0, -t))?;
                let d = self.base_dim;
                Ok((0..=self.order)
                    .map(|j| e.view((0, j * d), (d, d)).into_owned())
                    .collect())
            }
            ExpRoute::Structured => Ok(toeplitz_exponential(&self.h0, &self.v, self.order, t)),
        }
    }

    pub fn evolve(&self, psi0: &StateVector, t: f64) -> Result<CorrectionSeries> {
        self.evolve_with(psi0, t, ExpRoute::Dense)
    }

    /// Zeroth-order state and λ-free corrections of orders `1..=order` at time `t`.
    pub fn evolve_with(&self, psi0: &StateVector, t: f64, route: ExpRoute) -> Result<CorrectionSeries> {
        if psi0.len() != self.base_dim {
            return Err(Error::Dimension(format!(
                "initial state has dimension {} but H0 is {}x{}",
                psi0.len(),
                self.base_dim,
                self.base_dim
            )));
        }
        operator::ensure_normalized(psi0, self.tol.max(1e-8))?;
        let row = self.exponential_first_row(t, route)?;
        let mut states = row.iter().map(|b| b * psi0);
        let zeroth = states.next().expect("order >= 1");
        Ok(CorrectionSeries {
            time: t,
            zeroth,
            corrections: states.collect(),
        })
    }
}

/// First block row of `exp(-iMt)` computed with `m+1` blocks per matrix.
///
/// Block upper-triangular Toeplitz matrices are closed under products, with
/// `(AB)_j = Σ_{i≤j} A_i B_{j-i}` on the first block row. The
/// generator `-iMt` has blocks `(-iH0 t, -iV t, 0, …)`; it is scaled until its
/// 1-norm is at most 1/2, exponentiated by Taylor series, then squared back.
fn toeplitz_exponential(h0: &ComplexMatrix, v: &ComplexMatrix, order: usize, t: f64) -> Vec<ComplexMatrix> {
    let d = h0.nrows();
    let norm = (operator::norm_one(h0) + operator::norm_one(v)) * t.abs();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let factor = Complex64::new(0.0, -t * 0.5f64.powi(squarings));
    let x0 = h0 * factor;
    let x1 = v * factor;

    let zero = ComplexMatrix::zeros(d, d);
    let mut sum: Vec<ComplexMatrix> = (0..=order)
        .map(|j| {
            if j == 0 {
                ComplexMatrix::identity(d, d)
            } else {
                zero.clone()
            }
        })
        .collect();
    let mut term = sum.clone();
    for k in 1..=40 {
        let inv_k = Complex64::from(1.0 / k as f64);
        term = (0..=order)
            .map(|j| {
                let mut b = &term[j] * &x0;
                if j > 0 {
                    b += &term[j - 1] * &x1;
                }
                b * inv_k
            })
            .collect();
        let mut size = 0.0_f64;
        for (s, b) in sum.iter_mut().zip(&term) {
            *s += b;
            size = size.max(operator::norm_one(b));
        }
        if size <= 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = (0..=order)
            .map(|j| {
                let mut b = zero.clone();
                for i in 0..=j {
                    b += &sum[i] * &sum[j - i];
                }
                b
            })
            .collect();
    }
    sum
}

/// Zeroth-order evolved state plus the λ-free corrections at one time.
#[derive(Debug, Clone)]
pub struct CorrectionSeries {
    time: f64,
    zeroth: StateVector,
    corrections: Vec<StateVector>,
}

impl CorrectionSeries {
    pub fn time(&self) -> f64 {
        self.time
    }

    /// `exp(-iH0 t) ψ(0)`.
    pub fn zeroth(&self) -> &StateVector {
        &self.zeroth
    }

    pub fn order(&self) -> usize {
        self.corrections.len()
    }

    /// All corrections, index `k-1` holding order `k`.
    pub fn corrections(&self) -> &[StateVector] {
        &self.corrections
    }

    /// The order-`k` correction (`k ≥ 1`).
    pub fn correction(&self, k: usize) -> Result<&StateVector> {
        if k == 0 || k > self.corrections.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                dim: self.corrections.len() + 1,
            });
        }
        Ok(&self.corrections[k - 1])
    }

    /// `zeroth + Σ_k λ^k correction_k`. The truncated series is not normalized.
    pub fn approximate_state(&self, lambda: f64) -> Result<StateVector> {
        if lambda.is_nan() || lambda.abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "perturbation strength must satisfy |λ| < 1, got {lambda}"
            )));
        }
        let mut psi = self.zeroth.clone();
        let mut weight = 1.0;
        for c in &self.corrections {
            weight *= lambda;
            psi += c * Complex64::from(weight);
        }
        Ok(psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{basis_state, max_abs};
    use crate::sample;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(seed: u64, d: usize) -> (ComplexMatrix, ComplexMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (
            sample::random_hermitian(&mut rng, d, 1.0),
            sample::random_hermitian(&mut rng, d, 1.0),
        )
    }

    #[test]
    fn first_order_layout() {
        let (h0, v) = pair(1, 3);
        let sys = BlockSystem::assemble(&h0, &v, 1).unwrap();
        assert_eq!(sys.matrix().shape(), (6, 6));
        assert_eq!(sys.block(1, 1).unwrap(), h0);
        assert_eq!(sys.block(1, 2).unwrap(), v);
        assert_eq!(sys.block(2, 1).unwrap(), ComplexMatrix::zeros(3, 3));
        assert_eq!(sys.block(2, 2).unwrap(), h0);
    }

    #[test]
    fn second_order_layout() {
        let (h0, v) = pair(2, 2);
        let sys = BlockSystem::assemble(&h0, &v, 2).unwrap();
        assert_eq!(sys.matrix().shape(), (6, 6));
        for i in 1..=3 {
            for j in 1..=3 {
                let expected = match j as i64 - i as i64 {
                    0 => h0.clone(),
                    1 => v.clone(),
                    _ => ComplexMatrix::zeros(2, 2),
                };
                assert_eq!(sys.block(i, j).unwrap(), expected, "block ({i},{j})");
            }
        }
    }

    #[test]
    fn zero_perturbation_is_block_diagonal() {
        let (h0, _) = pair(3, 3);
        let v = ComplexMatrix::zeros(3, 3);
        for order in 1..=4 {
            let sys = BlockSystem::assemble(&h0, &v, order).unwrap();
            let mut expected = ComplexMatrix::zeros(3 * (order + 1), 3 * (order + 1));
            for i in 0..=order {
                expected.view_mut((3 * i, 3 * i), (3, 3)).copy_from(&h0);
            }
            assert_eq!(sys.matrix(), &expected);
            let psi = basis_state(3, 1).unwrap();
            let series = sys.evolve(&psi, 1.7).unwrap();
            assert!(series.corrections().iter().all(|c| c.norm() < 1e-12));
        }
    }

    #[test]
    fn assembly_errors() {
        let (h0, v) = pair(4, 3);
        assert!(matches!(
            BlockSystem::assemble(&h0, &v, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            BlockSystem::assemble(&h0, &v, 9),
            Err(Error::OrderCap { order: 9, cap: 8 })
        ));
        assert!(BlockSystem::assemble_with(&h0, &v, 9, 10, DEFAULT_TOL).is_ok());
        let small = ComplexMatrix::identity(2, 2);
        assert!(matches!(
            BlockSystem::assemble(&h0, &small, 1),
            Err(Error::Dimension(_))
        ));
        let mut bad = v.clone();
        bad[(0, 1)] += Complex64::new(0.0, 1e-3);
        assert!(matches!(
            BlockSystem::assemble(&h0, &bad, 1),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn low_power_entries() {
        let (h0, v) = pair(5, 3);
        let sys = BlockSystem::assemble(&h0, &v, 2).unwrap();
        assert_eq!(sys.power_entry(0, 1).unwrap(), ComplexMatrix::identity(3, 3));
        assert_eq!(sys.power_entry(0, 2).unwrap(), ComplexMatrix::zeros(3, 3));
        assert!(max_abs(&(sys.power_entry(1, 2).unwrap() - &v)) < 1e-15);
        assert!(max_abs(&(sys.power_entry(2, 3).unwrap() - &v * &v)) < 1e-14);
        let expected = &h0 * &v * &v + &v * &h0 * &v + &v * &v * &h0;
        assert!(max_abs(&(sys.power_entry(3, 3).unwrap() - expected)) < 1e-13);
        assert!(sys.power_entry(2, 4).is_err());
        assert!(sys.power_entry(2, 0).is_err());
    }

    #[test]
    fn power_entry_matches_dense_powers() {
        let (h0, v) = pair(6, 2);
        let sys = BlockSystem::assemble(&h0, &v, 3).unwrap();
        let mut p = ComplexMatrix::identity(8, 8);
        for n in 0..6 {
            for col in 1..=4 {
                let dense = p.view((0, 2 * (col - 1)), (2, 2)).into_owned();
                assert!(max_abs(&(sys.power_entry(n, col).unwrap() - dense)) < 1e-12);
            }
            p = &p * sys.matrix();
        }
    }

    #[test]
    fn evolve_at_time_zero() {
        let (h0, v) = pair(7, 4);
        let sys = BlockSystem::assemble(&h0, &v, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let psi = sample::random_state(&mut rng, 4);
        for route in [ExpRoute::Dense, ExpRoute::Structured] {
            let s = sys.evolve_with(&psi, 0.0, route).unwrap();
            assert!((s.zeroth() - &psi).norm() < 1e-15);
            assert_eq!(s.order(), 3);
            assert!(s.corrections().iter().all(|c| c.norm() == 0.0));
        }
    }

    #[test]
    fn evolve_rejects_bad_states() {
        let (h0, v) = pair(8, 3);
        let sys = BlockSystem::assemble(&h0, &v, 1).unwrap();
        let unnormalized = StateVector::from_element(3, Complex64::from(1.0));
        assert!(matches!(
            sys.evolve(&unnormalized, 1.0),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            sys.evolve(&basis_state(4, 0).unwrap(), 1.0),
            Err(Error::Dimension(_))
        ));
        assert!(sys.evolve(&basis_state(3, 0).unwrap(), f64::NAN).is_err());
    }

    #[test]
    fn two_level_first_order_closed_form() {
        // H0 = diag(0, 1), V = σx, ψ0 = |0⟩: the order-1 correction is
        // -i e^{-iH0 t} ∫ V(s) ds |0⟩ = (0, -i e^{-it} (e^{it} - 1)/i) = (0, e^{-it} - 1).
        let h0 = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::from(0.0), Complex64::from(1.0)]));
        let mut v = ComplexMatrix::zeros(2, 2);
        v[(0, 1)] = Complex64::from(1.0);
        v[(1, 0)] = Complex64::from(1.0);
        let sys = BlockSystem::assemble(&h0, &v, 1).unwrap();
        let t = 1.0;
        let c = sys.evolve(&basis_state(2, 0).unwrap(), t).unwrap();
        let c1 = c.correction(1).unwrap();
        assert!(c1[0].norm() < 1e-14);
        assert!((c1[1] - (Complex64::from_polar(1.0, -t) - 1.0)).norm() < 1e-13);
    }

    #[test]
    fn structured_route_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (order, t) in [(1, 0.3), (2, 1.0), (4, 2.5), (6, 7.0)] {
            let h0 = sample::random_hermitian(&mut rng, 4, 2.0);
            let v = sample::random_hermitian(&mut rng, 4, 1.0);
            let sys = BlockSystem::assemble(&h0, &v, order).unwrap();
            let dense = sys.exponential_first_row(t, ExpRoute::Dense).unwrap();
            let fast = sys.exponential_first_row(t, ExpRoute::Structured).unwrap();
            for (a, b) in dense.iter().zip(&fast) {
                let scale = max_abs(a).max(1.0);
                assert!(max_abs(&(a - b)) / scale < 1e-10, "order={order} t={t}");
            }
        }
    }

    #[test]
    fn approximate_state_weights() {
        let (h0, v) = pair(10, 3);
        let sys = BlockSystem::assemble(&h0, &v, 2).unwrap();
        let psi = basis_state(3, 2).unwrap();
        let s = sys.evolve(&psi, 0.8).unwrap();
        assert_eq!(s.approximate_state(0.0).unwrap(), *s.zeroth());
        let lam = 0.3;
        let manual = s.zeroth()
            + s.correction(1).unwrap() * Complex64::from(lam)
            + s.correction(2).unwrap() * Complex64::from(lam * lam);
        assert!((s.approximate_state(lam).unwrap() - manual).norm() < 1e-15);
        assert!(s.approximate_state(1.0).is_err());
        assert!(s.approximate_state(f64::NAN).is_err());
        assert!(s.correction(0).is_err() && s.correction(3).is_err());
    }

    #[test]
    fn exact_series_converges_to_full_propagator() {
        // In a finite space the block expansion is exact order by order.
        let (h0, v) = pair(11, 3);
        let sys = BlockSystem::assemble(&h0, &v, 8).unwrap();
        let psi = basis_state(3, 0).unwrap();
        let t = 1.3;
        let lam = 0.05;
        let s = sys.evolve(&psi, t).unwrap();
        let full = crate::operator::eigendecompose_hermitian(&(&h0 + &v * Complex64::from(lam)))
            .unwrap()
            .evolve(&psi, t);
        assert!((s.approximate_state(lam).unwrap() - full).norm() < 1e-11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn lower_orders_independent_of_assembly_order(seed in any::<u64>(), k in 1usize..4, extra in 0usize..3, t in 0.0f64..4.0) {
            let (h0, v) = pair(seed, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let psi = sample::random_state(&mut rng, 3);
            let small = BlockSystem::assemble(&h0, &v, k).unwrap().evolve(&psi, t).unwrap();
            let big = BlockSystem::assemble(&h0, &v, k + extra).unwrap().evolve(&psi, t).unwrap();
            for j in 1..=k {
                let diff = (small.correction(j).unwrap() - big.correction(j).unwrap()).norm();
                prop_assert!(diff <= 1e-10, "order {} differs by {:e}", j, diff);
            }
        }

        #[test]
        fn zeroth_order_is_unitary_evolution(seed in any::<u64>(), t in -5.0f64..5.0) {
            let (h0, v) = pair(seed, 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
            let psi = sample::random_state(&mut rng, 4);
            let s = BlockSystem::assemble(&h0, &v, 1).unwrap().evolve(&psi, t).unwrap();
            prop_assert!((s.zeroth().norm() - 1.0).abs() <= 1e-10);
        }
    }
}
