//! Rayleigh–Schrödinger corrections and the time-dependent terms that the
//! block method produces alongside them.
//!
//! All state vectors here hold coefficients in the eigenbasis of `H0`; use
//! [`UnperturbedSolution::from_eigenbasis`] to map them back.
//!
//! With `ψ(0) = |n⟩`, the block-method corrections decompose as
//!
//! ```text
//! ψ₁ = e^{-iE_n t} (|n¹⟩ - i t Δ¹ |n⟩) - |n¹⟩_t
//! ψ₂ = e^{-iE_n t} (|n²⟩ - i t Δ² |n⟩ - ½ t² (Δ¹)² |n⟩ - i t Δ¹ |n¹⟩) - |n²⟩_t + |n²₁⟩_t
//! ```
//!
//! where `|n¹⟩_t` and `|n²⟩_t` are the stationary corrections with each
//! `|k⟩` component carrying the phase `e^{-iE_k t}`, and
//! `|n²₁⟩_t = i Σ_k Σ_{m≠n} |k⟩ e^{-iE_k t} V_km V_mn / (E_n - E_m) ∫₀ᵗ e^{i(E_k - E_m)s} ds`.
//!
//! [`UnperturbedSolution::from_eigenbasis`]: crate::operator::UnperturbedSolution::from_eigenbasis

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{ComplexMatrix, StateVector, UnperturbedSolution};

/// Stationary corrections for level `n`.
#[derive(Debug, Clone)]
pub struct RsCorrections {
    pub level: usize,
    /// `Δ¹ = V_nn`.
    pub delta1: f64,
    /// `Δ² = Σ_{k≠n} |V_kn|² / (E_n - E_k)`.
    pub delta2: f64,
    /// `|n¹⟩`, orthogonal to `|n⟩`.
    pub state1: StateVector,
    /// `|n²⟩` without renormalization (no `|n⟩` component).
    pub state2: StateVector,
}

/// Time-dependent companions of the stationary corrections at one time.
#[derive(Debug, Clone)]
pub struct TimeDependentTerms {
    pub level: usize,
    pub time: f64,
    /// `|n¹⟩_t`.
    pub n1_t: StateVector,
    /// `|n²⟩_t`.
    pub n2_t: StateVector,
    /// `|n²₁⟩_t`.
    pub n2_1_t: StateVector,
}

/// `1e-8 ×` the spectral range of `H0`.
pub fn default_degeneracy_tol(sol: &UnperturbedSolution) -> f64 {
    1e-8 * sol.spectral_range()
}

/// `V_kn = ⟨k|V|n⟩` in the eigenbasis of `H0`.
pub fn coupling(sol: &UnperturbedSolution, v: &ComplexMatrix, k: usize, n: usize) -> Result<Complex64> {
    let dim = sol.dimension();
    if v.shape() != (dim, dim) {
        return Err(Error::Dimension(format!(
            "V is {:?} but H0 has dimension {dim}",
            v.shape()
        )));
    }
    for idx in [k, n] {
        if idx >= dim {
            return Err(Error::IndexOutOfRange { index: idx, dim });
        }
    }
    let bra = sol.eigenvector(k)?;
    let ket = sol.eigenvector(n)?;
    Ok(bra.dotc(&(v * ket)))
}

struct Levels<'a> {
    n: usize,
    energies: &'a [f64],
    couplings: ComplexMatrix,
}

impl<'a> Levels<'a> {
    fn new(sol: &'a UnperturbedSolution, v: &ComplexMatrix, n: usize, tol: f64) -> Result<Self> {
        let dim = sol.dimension();
        if v.shape() != (dim, dim) {
            return Err(Error::Dimension(format!(
                "V is {:?} but H0 has dimension {dim}",
                v.shape()
            )));
        }
        if n >= dim {
            return Err(Error::IndexOutOfRange { index: n, dim });
        }
        let energies = sol.energies();
        if let Some((k, gap)) = (0..dim)
            .filter(|&k| k != n)
            .map(|k| (k, (energies[n] - energies[k]).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        {
            if gap <= tol {
                return Err(Error::Degenerate {
                    first: n.min(k),
                    second: n.max(k),
                    gap,
                    tol,
                });
            }
        }
        Ok(Self {
            n,
            energies,
            couplings: sol.in_eigenbasis(v),
        })
    }

    fn others(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.energies.len()).filter(move |&k| k != self.n)
    }

    fn gap(&self, k: usize) -> f64 {
        self.energies[self.n] - self.energies[k]
    }

    fn v(&self, k: usize, m: usize) -> Complex64 {
        self.couplings[(k, m)]
    }

    /// `Σ_{m≠n} V_km V_mn / (E_n - E_m)`.
    fn first_order_coupling(&self, k: usize) -> Complex64 {
        self.others()
            .map(|m| self.v(k, m) * self.v(m, self.n) / self.gap(m))
            .sum()
    }

    fn stationary(&self) -> RsCorrections {
        let dim = self.energies.len();
        let n = self.n;
        let delta1 = self.v(n, n).re;
        let delta2 = self.others().map(|k| self.v(k, n).norm_sqr() / self.gap(k)).sum();
        let mut state1 = StateVector::zeros(dim);
        let mut state2 = StateVector::zeros(dim);
        for k in self.others() {
            let g = self.gap(k);
            state1[k] = self.v(k, n) / g;
            state2[k] = self.first_order_coupling(k) / g - self.v(n, n) * self.v(k, n) / (g * g);
        }
        RsCorrections {
            level: n,
            delta1,
            delta2,
            state1,
            state2,
        }
    }
}

/// `∫₀ᵗ e^{iωs} ds`, exactly `t` when `|ω| ≤ tol`.
fn phase_integral(omega: f64, t: f64, tol: f64) -> Complex64 {
    if omega.abs() <= tol {
        return Complex64::from(t);
    }
    // (e^{iωt} - 1)/(iω) = t e^{iωt/2} sinc(ωt/2), free of cancellation
    let half = 0.5 * omega * t;
    let sinc = if half == 0.0 { 1.0 } else { half.sin() / half };
    Complex64::from_polar(t * sinc, half)
}

/// Energy and state corrections to first and second order for level `n`.
///
/// Fails with [`Error::Degenerate`] when another level lies within
/// `degeneracy_tol` of `E_n`.
pub fn corrections(
    sol: &UnperturbedSolution,
    v: &ComplexMatrix,
    n: usize,
    degeneracy_tol: f64,
) -> Result<RsCorrections> {
    Ok(Levels::new(sol, v, n, degeneracy_tol)?.stationary())
}

pub fn time_dependent_terms(
    sol: &UnperturbedSolution,
    v: &ComplexMatrix,
    n: usize,
    t: f64,
    degeneracy_tol: f64,
) -> Result<TimeDependentTerms> {
    let levels = Levels::new(sol, v, n, degeneracy_tol)?;
    let rs = levels.stationary();
    let dim = sol.dimension();
    let phases = sol.phases(t);

    let n1_t = rs.state1.component_mul(&phases);
    let n2_t = rs.state2.component_mul(&phases);

    let mut n2_1_t = StateVector::zeros(dim);
    for k in 0..dim {
        let sum: Complex64 = levels
            .others()
            .map(|m| {
                let integral = phase_integral(levels.energies[k] - levels.energies[m], t, degeneracy_tol);
                levels.v(k, m) * levels.v(m, n) / levels.gap(m) * integral
            })
            .sum();
        n2_1_t[k] = Complex64::i() * phases[k] * sum;
    }

    Ok(TimeDependentTerms {
        level: n,
        time: t,
        n1_t,
        n2_t,
        n2_1_t,
    })
}

/// `e^{-iE_n t}(|n¹⟩ - i t Δ¹|n⟩) - |n¹⟩_t`, in the standard basis.
pub fn first_order_state(sol: &UnperturbedSolution, rs: &RsCorrections, terms: &TimeDependentTerms) -> StateVector {
    let n = rs.level;
    let t = terms.time;
    let mut inner = rs.state1.clone();
    inner[n] += Complex64::new(0.0, -t * rs.delta1);
    let phase = Complex64::from_polar(1.0, -sol.energies()[n] * t);
    sol.from_eigenbasis(&(inner * phase - &terms.n1_t))
}

/// The second-order counterpart of [`first_order_state`], in the standard basis.
pub fn second_order_state(sol: &UnperturbedSolution, rs: &RsCorrections, terms: &TimeDependentTerms) -> StateVector {
    let n = rs.level;
    let t = terms.time;
    let mut inner = &rs.state2 + &rs.state1 * Complex64::new(0.0, -t * rs.delta1);
    inner[n] += Complex64::new(-0.5 * t * t * rs.delta1 * rs.delta1, -t * rs.delta2);
    let phase = Complex64::from_polar(1.0, -sol.energies()[n] * t);
    sol.from_eigenbasis(&(inner * phase - &terms.n2_t + &terms.n2_1_t))
}
