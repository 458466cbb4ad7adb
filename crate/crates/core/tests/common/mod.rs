//! Helpers shared by the integration tests.
#![allow(dead_code)]

use painleve::fixtures::{random_matrix_triple, MatrixTriple};
use painleve::monodromy::ThetaParams;
use painleve::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real, non-integer exponents well away from the resonant values.
pub fn random_theta(rng: &mut ChaCha8Rng) -> ThetaParams {
    ThetaParams::real(
        rng.gen_range(0.1..0.9),
        rng.gen_range(0.1..0.9),
        rng.gen_range(0.1..0.9),
        rng.gen_range(0.1..0.9),
    )
    .unwrap()
}

/// Mildly complex exponents.
pub fn random_complex_theta(rng: &mut ChaCha8Rng) -> ThetaParams {
    let mut z = || c(rng.gen_range(0.1..0.9), rng.gen_range(-0.2..0.2));
    ThetaParams::new(z(), z(), z(), z()).unwrap()
}

pub fn random_triple(seed: u64) -> MatrixTriple {
    let mut g = rng(seed ^ 0x5eed);
    let theta = random_complex_theta(&mut g);
    random_matrix_triple(&theta, seed).unwrap()
}
