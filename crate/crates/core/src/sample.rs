//! Seeded random test systems.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::operator::{ComplexMatrix, StateVector};

fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Square matrix with i.i.d. complex Gaussian entries of standard deviation `scale`.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| {
        let (re, im) = gaussian_pair(rng);
        Complex64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2)
    })
}

/// `(G + G†)/2` for a complex Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> ComplexMatrix {
    let g = random_complex(rng, dim, scale);
    (&g + g.adjoint()) * Complex64::from(0.5)
}

/// Haar-ish unitary from the QR factorization of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let qr = random_complex(rng, dim, 1.0).qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let mut col = q.column_mut(j);
            col *= d / d.norm();
        }
    }
    q
}

/// Hermitian matrix `U diag(E) U†` with ascending energies separated by at
/// least `min_gap`.
pub fn random_nondegenerate<R: Rng + ?Sized>(rng: &mut R, dim: usize, min_gap: f64) -> ComplexMatrix {
    let mut e = rng.random_range(-1.0..0.0);
    let energies: Vec<f64> = (0..dim)
        .map(|_| {
            let current = e;
            e += min_gap + rng.random_range(0.0..1.0);
            current
        })
        .collect();
    with_spectrum(rng, &energies)
}

/// Hermitian matrix with the given spectrum in a random eigenbasis.
pub fn with_spectrum<R: Rng + ?Sized>(rng: &mut R, energies: &[f64]) -> ComplexMatrix {
    let u = random_unitary(rng, energies.len());
    let d = DVector::from_iterator(energies.len(), energies.iter().map(|&e| Complex64::from(e)));
    let h = &u * ComplexMatrix::from_diagonal(&d) * u.adjoint();
    (&h + h.adjoint()) * Complex64::from(0.5)
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let v = StateVector::from_fn(dim, |_, _| {
        let (re, im) = gaussian_pair(rng);
        Complex64::new(re, im)
    });
    let norm = v.norm();
    v / Complex64::from(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{eigendecompose_hermitian, hermitize_check, max_abs};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_have_their_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(hermitize_check(&random_hermitian(&mut rng, 5, 1.0), 0.0).unwrap());
        let u = random_unitary(&mut rng, 5);
        assert!(max_abs(&(u.adjoint() * &u - ComplexMatrix::identity(5, 5))) < 1e-13);
        assert!((random_state(&mut rng, 7).norm() - 1.0).abs() < 1e-14);
        let h = random_nondegenerate(&mut rng, 5, 0.2);
        let sol = eigendecompose_hermitian(&h).unwrap();
        assert!(sol.energies().windows(2).all(|w| w[1] - w[0] > 0.2 - 1e-10));
    }
}
