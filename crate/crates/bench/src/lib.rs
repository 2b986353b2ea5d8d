//! Shared fixtures for the criterion benchmarks.

use blockpert::sample;
use blockpert::{ComplexMatrix, FockSpec, OscillatorProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random Hermitian `(H0, V)` of dimension `d`, deterministic in `seed`.
pub fn random_pair(seed: u64, d: usize) -> (ComplexMatrix, ComplexMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        sample::random_hermitian(&mut rng, d, 1.0),
        sample::random_hermitian(&mut rng, d, 0.5),
    )
}

/// The quadratically perturbed oscillator at `ω = 1`.
pub fn oscillator_pair(d: usize) -> (ComplexMatrix, ComplexMatrix) {
    OscillatorProblem::new(FockSpec::new(d, 1.0).expect("d >= 4"), 0.0)
        .expect("λ = 0 is valid")
        .hamiltonians()
}
