//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham, "The scaling and squaring method for the matrix exponential
//! revisited", 2005).
//!
//! This is the general-purpose route used for the non-normal block matrices.
//! Hermitian generators should go through [`UnperturbedSolution::propagator`]
//! instead.
//!
//! [`UnperturbedSolution::propagator`]: super::UnperturbedSolution::propagator

use num_complex::Complex64;

use super::{norm_one, ComplexMatrix};
use crate::error::{Error, Result};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(scale · m)`.
pub fn matrix_exp(m: &ComplexMatrix, scale: Complex64) -> Result<ComplexMatrix> {
    if !(scale.re.is_finite() && scale.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite exponent scale {scale}")));
    }
    expm(&(m * scale))
}

/// `exp(a)` for a square matrix `a`.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!(
            "exp of a non-square {}x{} matrix",
            n,
            a.ncols()
        )));
    }
    super::check_finite(a)?;
    let norm = norm_one(a);
    let ident = ComplexMatrix::identity(n, n);
    if norm == 0.0 {
        return Ok(ident);
    }

    let a2 = a * a;
    for (theta, coeffs) in [
        (THETA_3, &PADE_3[..]),
        (THETA_5, &PADE_5[..]),
        (THETA_7, &PADE_7[..]),
        (THETA_9, &PADE_9[..]),
    ] {
        if norm <= theta {
            let (u, v) = low_order_terms(a, &a2, coeffs);
            return solve_pade(&u, &v);
        }
    }

    let squarings = (norm / THETA_13).log2().ceil().max(0.0) as u32;
    let factor = Complex64::from(0.5f64.powi(squarings as i32));
    let a = a * factor;
    let a2 = a2 * (factor * factor);
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = |i: usize| Complex64::from(PADE_13[i]);

    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &ident * b(1));
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &ident * b(0);

    let mut r = solve_pade(&u, &v)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Odd and even parts `(U, V)` of a Padé numerator of order ≤ 9.
fn low_order_terms(a: &ComplexMatrix, a2: &ComplexMatrix, coeffs: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.nrows();
    let mut power = ComplexMatrix::identity(n, n);
    let mut odd = ComplexMatrix::zeros(n, n);
    let mut even = ComplexMatrix::zeros(n, n);
    for pair in coeffs.chunks(2) {
        even += &power * Complex64::from(pair[0]);
        if let Some(&c) = pair.get(1) {
            odd += &power * Complex64::from(c);
        }
        power = &power * a2;
    }
    (a * odd, even)
}

/// `(V - U)^{-1} (V + U)`.
fn solve_pade(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = (v - u).lu();
    lu.solve(&(v + u))
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{eigendecompose_hermitian, max_abs};
    use crate::sample;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_scale_gives_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = sample::random_hermitian(&mut rng, 4, 3.0);
        let e = matrix_exp(&m, Complex64::from(0.0)).unwrap();
        assert_eq!(e, ComplexMatrix::identity(4, 4));
    }

    #[test]
    fn diagonal_phases() {
        let (e0, e1) = (0.3, -1.7);
        let m = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::from(e0), Complex64::from(e1)]));
        let t = 4.2;
        let e = matrix_exp(&m, Complex64::new(0.0, -t)).unwrap();
        assert!((e[(0, 0)] - Complex64::from_polar(1.0, -e0 * t)).norm() < 1e-14);
        assert!((e[(1, 1)] - Complex64::from_polar(1.0, -e1 * t)).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15 && e[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn inverse_pair_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for t in [0.01, 0.3, 2.0, 17.0] {
            let h = sample::random_hermitian(&mut rng, 6, 1.0);
            let fwd = matrix_exp(&h, Complex64::new(0.0, -t)).unwrap();
            let back = matrix_exp(&h, Complex64::new(0.0, t)).unwrap();
            assert!(
                max_abs(&(&fwd * &back - ComplexMatrix::identity(6, 6))) < 1e-10,
                "t={t}"
            );
        }
    }

    #[test]
    fn agrees_with_eigen_route_on_hermitian_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in [0.002, 0.1, 0.9, 3.0, 40.0] {
            let h = sample::random_hermitian(&mut rng, 7, 2.0);
            let sol = eigendecompose_hermitian(&h).unwrap();
            let pade = matrix_exp(&h, Complex64::new(0.0, -t)).unwrap();
            assert!(max_abs(&(pade - sol.propagator(t))) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn nilpotent_input_is_exact() {
        // exp([[0, x], [0, 0]]) = [[1, x], [0, 1]]
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(30.0, -4.0);
        let e = expm(&m).unwrap();
        assert!((e[(0, 1)] - Complex64::new(30.0, -4.0)).norm() < 1e-12);
        assert!((e[(0, 0)] - Complex64::from(1.0)).norm() < 1e-13);
    }

    #[test]
    fn matches_independent_implementation_on_non_normal_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for scale in [0.005, 0.2, 1.0, 2.0, 8.0] {
            let mut m = sample::random_complex(&mut rng, 6, scale);
            for i in 0..6 {
                for j in 0..i {
                    m[(i, j)] = Complex64::from(0.0);
                }
            }
            let ours = expm(&m).unwrap();
            let reference = m.clone().exp();
            let rel = max_abs(&(&ours - &reference)) / max_abs(&reference);
            assert!(rel < 1e-12, "scale={scale} rel={rel:e}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(expm(&ComplexMatrix::zeros(2, 3)).is_err());
        assert!(matrix_exp(&ComplexMatrix::zeros(2, 2), Complex64::new(f64::NAN, 0.0)).is_err());
    }
}
