//! Complex special functions used by the connection formulae and by the
//! elliptic representation of PVI solutions.
//!
//! Everything here is a pure function.  Logarithms and square roots are
//! principal (`arg ∈ (−π, π]`).

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{C64, I};

const POLE_TOL: f64 = 1e-12;
const SERIES_CAP: usize = 10_000;

// Lanczos approximation, g = 7, nine coefficients (the GSL set).  Relative
// accuracy is a few ulps for Re z ≥ 1/2 in the range the formulae need.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Returns the non-positive integer `z` sits on, if any (within `tol`).
pub(crate) fn nonpositive_integer_near(z: C64, tol: f64) -> Option<i64> {
    let n = z.re.round();
    if n <= 0.0 && (z - n).norm() < tol {
        Some(n as i64)
    } else {
        None
    }
}

fn ln_gamma_right(z: C64) -> C64 {
    let w = z - 1.0;
    let mut s = C64::new(LANCZOS[0], 0.0);
    for (k, p) in LANCZOS.iter().enumerate().skip(1) {
        s += *p / (w + k as f64);
    }
    let t = w + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (w + 0.5) * t.ln() - t + s.ln()
}

/// Γ(z) for complex `z`, with the reflection formula for `Re z < 1/2`.
pub fn complex_gamma(z: C64) -> Result<C64> {
    if nonpositive_integer_near(z, POLE_TOL).is_some() {
        return Err(Error::PoleAtNonPositiveInteger(z));
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        Ok(PI / (s * ln_gamma_right(1.0 - z).exp()))
    } else {
        Ok(ln_gamma_right(z).exp())
    }
}

/// The digamma function ψ = Γ'/Γ.
pub fn digamma(z: C64) -> Result<C64> {
    if nonpositive_integer_near(z, POLE_TOL).is_some() {
        return Err(Error::PoleAtNonPositiveInteger(z));
    }
    if z.re < 0.5 {
        // ψ(z) = ψ(1−z) − π cot(πz)
        let t = (PI * z).tan();
        return Ok(digamma_right(1.0 - z) - PI / t);
    }
    Ok(digamma_right(z))
}

fn digamma_right(mut z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    while z.re < 10.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let z2 = 1.0 / (z * z);
    // Bernoulli tail: Σ B_2k / (2k z^2k)
    let tail = z2
        * (1.0 / 12.0
            - z2 * (1.0 / 120.0
                - z2 * (1.0 / 252.0
                    - z2 * (1.0 / 240.0
                        - z2 * (1.0 / 132.0 - z2 * (691.0 / 32_760.0 - z2 / 12.0))))));
    acc + z.ln() - 0.5 / z - tail
}

fn check_disk(x: C64) -> Result<()> {
    if x.norm() < 1.0 && x.re.is_finite() && x.im.is_finite() {
        Ok(())
    } else {
        Err(Error::OutsideDisk(x.norm()))
    }
}

/// Sums `Σ a_n x^n` given the ratio `a_{n+1}/a_n`; shared stopping rule:
/// two consecutive terms below 1e−15·|sum| and a geometric tail bound
/// below 1e−14·|sum|.
fn sum_series(x: C64, mut next: impl FnMut(usize, C64) -> C64, first: C64) -> Result<C64> {
    let q = x.norm();
    let mut term = first;
    let mut sum = first;
    let mut quiet = 0;
    for n in 0..SERIES_CAP {
        term = next(n, term);
        sum += term;
        let small = term.norm() <= 1e-15 * sum.norm();
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 2 && term.norm() * q / (1.0 - q) <= 1e-14 * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::OutsideDisk(q))
}

/// Gauss hypergeometric F(1/2, 1/2, 1; x) for |x| < 1.
pub fn hyper_f(x: C64) -> Result<C64> {
    check_disk(x)?;
    if x == C64::new(0.0, 0.0) {
        return Ok(C64::new(1.0, 0.0));
    }
    sum_series(
        x,
        |n, t| {
            let k = n as f64;
            let r = (k + 0.5) / (k + 1.0);
            t * x * (r * r)
        },
        C64::new(1.0, 0.0),
    )
}

/// F1(x) = Σ ((1/2)_n / n!)² · 2[ψ(n+1/2) − ψ(n+1)] xⁿ for |x| < 1.
///
/// The digamma differences are advanced by ψ(a+1) = ψ(a) + 1/a starting
/// from 2[ψ(1/2) − ψ(1)] = −4 ln 2.
pub fn hyper_f1(x: C64) -> Result<C64> {
    check_disk(x)?;
    let d0 = -4.0 * LN_2;
    if x == C64::new(0.0, 0.0) {
        return Ok(C64::new(d0, 0.0));
    }
    let q = x.norm();
    let mut a = C64::new(1.0, 0.0);
    let mut d = d0;
    let mut sum = C64::new(d0, 0.0);
    let mut quiet = 0;
    for n in 0..SERIES_CAP {
        let k = n as f64;
        let r = (k + 0.5) / (k + 1.0);
        a *= x * (r * r);
        d += 2.0 / (k + 0.5) - 2.0 / (k + 1.0);
        let term = a * d;
        sum += term;
        let small = term.norm() <= 1e-15 * sum.norm();
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 2 && term.norm() * q / (1.0 - q) <= 1e-14 * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::OutsideDisk(q))
}

/// Half-periods of the Legendre curve y² = ξ(ξ−1)(ξ−x) and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPeriods {
    pub omega1: C64,
    pub omega2: C64,
    pub tau: C64,
}

impl HalfPeriods {
    /// ω1 = (π/2) F(x), ω2 = −(i/2)[F(x) ln x + F1(x)], τ = ω2/ω1.
    ///
    /// Requires `0 < |x| < 1` and `|arg x| < π` (principal log of `x`).
    pub fn from_x(x: C64) -> Result<Self> {
        check_disk(x)?;
        if x.norm() == 0.0 || (x.im == 0.0 && x.re < 0.0) {
            return Err(Error::OutsideCutPlane(x));
        }
        let f = hyper_f(x)?;
        let f1 = hyper_f1(x)?;
        let omega1 = 0.5 * PI * f;
        let omega2 = -0.5 * I * (f * x.ln() + f1);
        Ok(HalfPeriods {
            omega1,
            omega2,
            tau: omega2 / omega1,
        })
    }
}

/// Weierstrass ℘(u; ω1, ω2) through its Fourier expansion
///
/// ```text
/// ℘(u) = (π/2ω1)² { −1/3 + 1/sin²(f/2)
///                  + 8 Σ_{n≥1} n e^{2iπnτ}/(1−e^{2iπnτ}) (1 − cos nf) },   f = πu/ω1
/// ```
///
/// valid while `Im τ > |Im(u/2ω1)|`.  Terms are formed as
/// `e^{n(2iπτ ± if)}` so that no intermediate overflows near the edge of
/// the strip.
pub fn weierstrass_p_fourier(u: C64, periods: &HalfPeriods) -> Result<C64> {
    let HalfPeriods { omega1, tau, .. } = *periods;
    let shift = (u / (2.0 * omega1)).im.abs();
    let gap = tau.im - shift;
    if !(gap > 0.0) {
        return Err(Error::OutsideFourierDomain {
            im_tau: tau.im,
            im_shift: shift,
        });
    }
    let f = PI * u / omega1;
    let s = (0.5 * f).sin();
    if s.norm() < 1e-10 {
        return Err(Error::NearPole(format!("sin(f/2) = {s} in the Fourier series of P")));
    }
    let rho = (-2.0 * PI * gap).exp();
    let mut series = C64::new(0.0, 0.0);
    let base = 2.0 * PI * I * tau;
    for n in 1..=100_000usize {
        let k = n as f64;
        let qn = (k * base).exp();
        let ep = (k * (base + I * f)).exp();
        let em = (k * (base - I * f)).exp();
        let term = 8.0 * k / (1.0 - qn) * (qn - 0.5 * (ep + em));
        series += term;
        let scale = series.norm().max(1.0);
        let tail = term.norm() * rho / (1.0 - rho) * (k + 1.0) / k;
        if term.norm() <= 1e-16 * scale && tail <= 1e-14 * scale {
            let bracket = -1.0 / 3.0 + 1.0 / (s * s) + series;
            let pref = PI / (2.0 * omega1);
            return Ok(pref * pref * bracket);
        }
    }
    Err(Error::OutsideFourierDomain {
        im_tau: tau.im,
        im_shift: shift,
    })
}
