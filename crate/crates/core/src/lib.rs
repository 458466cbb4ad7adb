//! Numerical toolkit for the sixth Painlevé equation.
//!
//! The crate turns monodromy data of the associated Fuchsian system into
//! the critical behaviour of the corresponding PVI transcendent at the three
//! fixed singular points `x = 0, 1, ∞`, and back.
//!
//! * [`special`] — complex Γ, ψ, the hypergeometric series behind the
//!   elliptic half-periods, and the Fourier form of ℘.
//! * [`monodromy`] — trace coordinates on the cubic surface, braid and
//!   symmetry actions, σ ↔ trace dictionary, Schlesinger leading matrices.
//! * [`connection`] — the explicit connection formulae in every regime.
//! * [`series`] — the doubly graded full expansions and their evaluation.
//! * [`oracle`] — independent checks: direct integration of PVI, the
//!   Picard family, and the end-to-end connection verifier.
//!
//! All fractional powers `x^σ` mean `exp(σ ln x)` with the principal
//! logarithm on the plane cut along the negative axis.

pub mod connection;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod monodromy;
pub mod oracle;
pub mod series;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Shorthand used throughout the crate.
pub(crate) type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
