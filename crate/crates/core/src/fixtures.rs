//! Manufactured monodromy data for tests and for the `verify` batch
//! driver: explicit matrix triples, and generic datasets built from the
//! constants at 0.  The public API of the other modules is trace-only.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::connection::traces_from_r;
use crate::monodromy::{sigma_from_trace, MonodromyTraces, Regime, ThetaParams};
use crate::{C64, I};

const MAX_ATTEMPTS: usize = 100;
const MAX_CONDITION: f64 = 1e4;

/// Three monodromy matrices and the exponents they realise (θ∞ is the one
/// induced by `Tr(M1 Mx M0)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixTriple {
    pub m0: Mat2,
    pub mx: Mat2,
    pub m1: Mat2,
    pub theta: ThetaParams,
}

impl MatrixTriple {
    pub fn traces(&self) -> MonodromyTraces {
        MonodromyTraces {
            p0: self.m0.trace(),
            px: self.mx.trace(),
            p1: self.m1.trace(),
            pinf: (self.m1 * self.mx * self.m0).trace(),
            p0x: (self.m0 * self.mx).trace(),
            p01: (self.m0 * self.m1).trace(),
            px1: (self.mx * self.m1).trace(),
        }
    }

    /// Matrix action of a loop of `x` around 0: `M0' = Mx M0 Mx⁻¹`,
    /// `Mx' = (Mx M0) Mx (Mx M0)⁻¹`, `M1' = M1`.
    pub fn braid_around_0(&self) -> Self {
        let mxi = self.mx.inverse().expect("monodromy matrices are unimodular");
        let m0i = self.m0.inverse().expect("monodromy matrices are unimodular");
        MatrixTriple {
            m0: self.mx * self.m0 * mxi,
            mx: self.mx * self.m0 * self.mx * m0i * mxi,
            ..*self
        }
    }

    /// Matrix action of a loop of `x` around 1: `Mx' = M1 Mx M1⁻¹`,
    /// `M1' = (M1 Mx) M1 (M1 Mx)⁻¹`, `M0' = M0`.
    pub fn braid_around_1(&self) -> Self {
        let m1i = self.m1.inverse().expect("monodromy matrices are unimodular");
        let mxi = self.mx.inverse().expect("monodromy matrices are unimodular");
        MatrixTriple {
            mx: self.m1 * self.mx * m1i,
            m1: self.m1 * self.mx * self.m1 * mxi * m1i,
            ..*self
        }
    }
}

fn random_entry(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn condition(c: &Mat2) -> Option<f64> {
    let inv = c.inverse()?;
    Some(c.norm() * inv.norm())
}

/// `M_j = C_j⁻¹ diag(e^{iπθ_j}, e^{−iπθ_j}) C_j` with random conjugators.
///
/// The input θ∞ is ignored; the returned triple carries the θ∞ induced by
/// `Tr(M1 Mx M0) = 2cos πθ∞` (principal determination, 0 ≤ Re θ∞ ≤ 1).
pub fn random_matrix_triple(theta: &ThetaParams, seed: u64) -> Result<MatrixTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<Mat2> {
        for _ in 0..MAX_ATTEMPTS {
            let c = Mat2::new(
                random_entry(rng),
                random_entry(rng),
                random_entry(rng),
                random_entry(rng),
            );
            match condition(&c) {
                Some(k) if k < MAX_CONDITION => return Ok(c),
                _ => continue,
            }
        }
        Err(Error::DegenerateConjugator(MAX_ATTEMPTS))
    };
    let conj = |t: C64, c: Mat2| -> Mat2 {
        let e = (I * PI * t).exp();
        c.inverse().unwrap() * Mat2::diag(e, 1.0 / e) * c
    };
    let m0 = conj(theta.theta0, draw(&mut rng)?);
    let mx = conj(theta.thetax, draw(&mut rng)?);
    let m1 = conj(theta.theta1, draw(&mut rng)?);
    let pinf = (m1 * mx * m0).trace();
    let mut thetainf = sigma_from_trace(pinf).sigma;
    if thetainf.norm() == 0.0 {
        thetainf = C64::new(2.0, 0.0);
    }
    Ok(MatrixTriple {
        m0,
        mx,
        m1,
        theta: ThetaParams::new(theta.theta0, theta.thetax, theta.theta1, thetainf)?,
    })
}

/// A consistent set of monodromy data in the power-law regime at both 0
/// and 1, manufactured from the constants `(σ0, a0)` at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenericDataset {
    pub theta: ThetaParams,
    pub traces: MonodromyTraces,
    pub sigma0: C64,
    pub a0: C64,
}

/// Draws real exponents in `[0.1, 0.9]`, `σ0` with `Re σ0 ∈ [0.15, 0.6]`,
/// `|Im σ0| ≤ 0.4`, and `a0` of modulus in `[0.3, 1]`, retrying until the
/// exponent at 1 is also generic.
pub fn random_generic_dataset(seed: u64) -> Result<GenericDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut th = || rng.gen_range(0.1..0.9);
        let theta = match ThetaParams::real(th(), th(), th(), th()) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let sigma0 = C64::new(rng.gen_range(0.15..0.6), rng.gen_range(-0.4..0.4));
        let a0 = C64::from_polar(rng.gen_range(0.3..1.0), rng.gen_range(-PI..PI));
        let (t0, tx) = (theta.theta0, theta.thetax);
        let s2 = sigma0 * sigma0;
        let r = (s2 - (t0 - tx) * (t0 - tx)) * ((t0 + tx) * (t0 + tx) - s2) / (16.0 * s2 * sigma0 * a0);
        let Ok(traces) = traces_from_r(&theta, sigma0, r) else {
            continue;
        };
        if sigma_from_trace(traces.px1).regime != Regime::Generic {
            continue;
        }
        return Ok(GenericDataset {
            theta,
            traces,
            sigma0,
            a0,
        });
    }
    Err(Error::DegenerateConjugator(MAX_ATTEMPTS))
}
