//! Explicit connection formulae: integration constants of the branches at
//! `x = 0, 1, ∞` as functions of one set of monodromy data.
//!
//! The three critical points are handled by one formula each, evaluated
//! with relabelled exponents and traces: at `x = 1` the exponents are
//! `(θ1, θx, θ0, θ∞)` and the traces `(σ1; −p01 − p0x px1 + p∞px + p0p1, p0x)`,
//! at `x = ∞` they are `(θ0, θ1, θx, θ∞)` and
//! `(σ∞; −p0x − p01 px1 + p∞p1 + p0px, px1)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monodromy::{
    sigma_from_trace, trace_of, CriticalExponent, MonodromyTraces, Regime, ThetaParams,
};
use crate::special::{complex_gamma, nonpositive_integer_near};
use crate::{C64, I};

/// Any Γ argument this close to a pole makes the data non-generic.
pub const GAMMA_POLE_TOL: f64 = 1e-9;
/// Printed denominators below this magnitude make the data non-generic.
pub const DENOMINATOR_TOL: f64 = 1e-12;
/// σ this close to ±(θ0 ± θx) is treated as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-6;

/// The three fixed singular points of PVI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Zero,
    One,
    Infinity,
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Point::Zero => "x=0",
            Point::One => "x=1",
            Point::Infinity => "x=inf",
        })
    }
}

impl Point {
    /// Exponents in the order the x = 0 formulae expect them.
    pub fn local_theta(&self, theta: &ThetaParams) -> ThetaParams {
        match self {
            Point::Zero => *theta,
            Point::One => theta.relabel_at_one(),
            Point::Infinity => theta.relabel_at_infinity(),
        }
    }

    /// `(p_ij defining σ, first trace argument, second trace argument)`.
    pub fn local_traces(&self, t: &MonodromyTraces) -> (C64, C64, C64) {
        let MonodromyTraces {
            p0,
            px,
            p1,
            pinf,
            p0x,
            p01,
            px1,
        } = *t;
        match self {
            Point::Zero => (p0x, p01, px1),
            Point::One => (px1, -p01 - p0x * px1 + pinf * px + p0 * p1, p0x),
            Point::Infinity => (p01, -p0x - p01 * px1 + pinf * p1 + p0 * px, px1),
        }
    }

    /// The local variable: `x`, `1 − x` or `1/x`.
    pub fn local_variable(&self, x: C64) -> C64 {
        match self {
            Point::Zero => x,
            Point::One => 1.0 - x,
            Point::Infinity => 1.0 / x,
        }
    }

    /// Maps a value of the local solution back to `y(x)`: `y = ỹ`,
    /// `y = 1 − ỹ`, or `y = x ỹ`.
    pub fn to_global(&self, x: C64, local: C64) -> C64 {
        match self {
            Point::Zero => local,
            Point::One => 1.0 - local,
            Point::Infinity => x * local,
        }
    }
}

/// Integration constants of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchData {
    pub point: Point,
    pub sigma: CriticalExponent,
    pub r: C64,
    /// Power-law amplitude (generic regime).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<C64>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub big_a: Option<C64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub big_b: Option<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<C64>,
    /// σ is within 1e−6 of a degenerate value; r is the limit obtained by
    /// symmetric evaluation and carries fewer digits.
    #[serde(default)]
    pub reduced_precision: bool,
}

/// Branches at the three critical points of one transcendent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionResult {
    pub at0: BranchData,
    pub at1: BranchData,
    #[serde(rename = "atInf")]
    pub at_inf: BranchData,
}

fn s_half(z: C64) -> C64 {
    (0.5 * PI * z).sin()
}

fn non_generic(detail: String) -> Error {
    Error::NonGenericData {
        point: None,
        detail,
    }
}

fn check_denominator(value: C64, name: &str) -> Result<()> {
    if value.norm() < DENOMINATOR_TOL || !value.re.is_finite() || !value.im.is_finite() {
        Err(non_generic(format!("printed denominator {name} = {value} vanishes")))
    } else {
        Ok(())
    }
}

/// Γ(num…)/Γ(den…) with a pole check on every argument.
fn gamma_ratio(num: &[C64], den: &[C64]) -> Result<C64> {
    for z in num.iter().chain(den) {
        if let Some(n) = nonpositive_integer_near(*z, GAMMA_POLE_TOL) {
            return Err(non_generic(format!(
                "Gamma argument {z} is at the pole {n}"
            )));
        }
    }
    let mut out = C64::new(1.0, 0.0);
    for z in num {
        out *= complex_gamma(*z)?;
    }
    for z in den {
        out /= complex_gamma(*z)?;
    }
    Ok(out)
}

/// `[σ²−(θ0−θx)²][(θ0+θx)²−σ²] / (16σ³r)`, the amplitude of `x^{1−σ}`.
pub fn amplitude_a(theta: &ThetaParams, sigma: C64, r: C64) -> C64 {
    let (t0, tx) = (theta.theta0, theta.thetax);
    let s2 = sigma * sigma;
    (s2 - (t0 - tx) * (t0 - tx)) * ((t0 + tx) * (t0 + tx) - s2) / (16.0 * s2 * sigma * r)
}

/// `(A, B)` of the oscillatory leading terms.
///
/// Oscillatory (`Re σ = 0`): `B = (θ0² − θx² + σ²)/(2σ²)`,
/// `A = √(θ0²/σ² − B²)`.  Inverse-oscillatory (`σ = 1 + iν`):
/// `B = (ν² + θ1² − (θ∞−1)²)/(2ν²)`, `A = i√((θ∞−1)²/ν² + B²)`.
/// Principal square roots; the other sign shifts φ by an odd multiple of π.
pub fn coefficients_ab(theta: &ThetaParams, sigma: &CriticalExponent) -> Result<(C64, C64)> {
    let s = sigma.sigma;
    match sigma.regime {
        Regime::Oscillatory => {
            let s2 = s * s;
            let t0 = theta.theta0;
            let tx = theta.thetax;
            let b = (t0 * t0 - tx * tx + s2) / (2.0 * s2);
            let a = (t0 * t0 / s2 - b * b).sqrt();
            Ok((a, b))
        }
        Regime::InverseOscillatory => {
            let nu = (s - 1.0) / I;
            let nu2 = nu * nu;
            let t1 = theta.theta1;
            let ti = theta.thetainf - 1.0;
            let b = (nu2 + t1 * t1 - ti * ti) / (2.0 * nu2);
            let a = I * (ti * ti / nu2 + b * b).sqrt();
            Ok((a, b))
        }
        found => Err(Error::WrongRegime {
            operation: "coefficients_ab",
            expected: "Oscillatory or InverseOscillatory",
            found,
        }),
    }
}

/// The integration constant `r` for `0 ≤ Re σ < 1` as a function of the
/// monodromy data:
///
/// ```text
/// r = (θ0−θx+σ)(θ0+θx−σ)(θ∞+θ1−σ) / [4σ(θ∞+θ1+σ)] · 1/F,
/// F = Γ-ratio · V / U
/// ```
pub fn r_generic(theta: &ThetaParams, sigma: C64, p01: C64, px1: C64) -> Result<C64> {
    let ThetaParams {
        theta0: t0,
        thetax: tx,
        theta1: t1,
        thetainf: ti,
    } = *theta;
    let one = C64::new(1.0, 0.0);
    let g = gamma_ratio(
        &[
            one + sigma,
            one + sigma,
            0.5 * (t0 + tx - sigma) + 1.0,
            0.5 * (tx - t0 - sigma) + 1.0,
            0.5 * (ti + t1 - sigma) + 1.0,
            0.5 * (t1 - ti - sigma) + 1.0,
        ],
        &[
            one - sigma,
            one - sigma,
            0.5 * (t0 + tx + sigma) + 1.0,
            0.5 * (tx - t0 + sigma) + 1.0,
            0.5 * (ti + t1 + sigma) + 1.0,
            0.5 * (t1 - ti + sigma) + 1.0,
        ],
    )?;
    let (c0, cx, c1, ci) = (
        (PI * t0).cos(),
        (PI * tx).cos(),
        (PI * t1).cos(),
        (PI * ti).cos(),
    );
    let sin_s = (PI * sigma).sin();
    let u = (0.5 * I * sin_s * px1 - cx * ci - c0 * c1) * (I * PI * sigma).exp()
        + 0.5 * I * sin_s * p01
        + cx * c1
        + ci * c0;
    let v = 4.0
        * s_half(t0 + tx - sigma)
        * s_half(t0 - tx + sigma)
        * s_half(ti + t1 - sigma)
        * s_half(ti - t1 + sigma);
    let den = 4.0 * sigma * (ti + t1 + sigma);
    check_denominator(den, "4 sigma (theta_inf + theta_1 + sigma)")?;
    check_denominator(u, "U")?;
    check_denominator(v, "V")?;
    let f = g * v / u;
    let pref = (t0 - tx + sigma) * (t0 + tx - sigma) * (ti + t1 - sigma) / den;
    Ok(pref / f)
}

/// `G1 … G6` of `px1 = G1/r + G2 + G3 r`, `p01 = G4/r + G5 + G6 r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCoefficients(pub [C64; 6]);

/// Intermediate quantities of the G-coefficient block, exposed for tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GBlock {
    pub xi: C64,
    pub xi1: C64,
    pub omega: C64,
    pub omega1: C64,
    pub calf: C64,
    pub v: C64,
    pub v1: C64,
}

fn v_of(theta: &ThetaParams, sigma: C64) -> C64 {
    let ThetaParams {
        theta0: t0,
        thetax: tx,
        theta1: t1,
        thetainf: ti,
    } = *theta;
    4.0 * s_half(t0 + tx - sigma)
        * s_half(t0 - tx + sigma)
        * s_half(ti + t1 - sigma)
        * s_half(ti - t1 + sigma)
}

/// Ξ, Ξ1, Ω, Ω1, 𝓕, V, V1 as printed.
pub fn g_block(theta: &ThetaParams, sigma: C64) -> Result<GBlock> {
    let ThetaParams {
        theta0: t0,
        thetax: tx,
        theta1: t1,
        thetainf: ti,
    } = *theta;
    let s = sigma;
    let second_plus = s_half(t1 + ti + s) * s_half(t1 - ti + s) + s_half(t1 + ti - s) * s_half(t1 - ti - s);
    let second_minus = s_half(t1 + ti + s) * s_half(t1 - ti + s) - s_half(t1 + ti - s) * s_half(t1 - ti - s);
    let xi = (s_half(t0 + tx + s) * s_half(t0 - tx - s) + s_half(t0 - tx + s) * s_half(t0 + tx - s))
        * second_plus;
    let xi1 = (s_half(t0 + tx + s) * s_half(t0 - tx + s) + s_half(t0 + tx - s) * s_half(t0 - tx - s))
        * second_plus;
    let omega = (-s_half(t0 + tx + s) * s_half(t0 - tx - s) + s_half(t0 - tx + s) * s_half(t0 + tx - s))
        * second_minus;
    let omega1 = (s_half(t0 + tx + s) * s_half(t0 - tx + s) - s_half(t0 + tx - s) * s_half(t0 - tx - s))
        * second_minus;

    let one = C64::new(1.0, 0.0);
    let g = gamma_ratio(
        &[
            one + s,
            one + s,
            0.5 * (t0 + tx - s) + 1.0,
            0.5 * (tx - t0 - s) + 1.0,
            0.5 * (ti + t1 - s) + 1.0,
            0.5 * (t1 - ti - s) + 1.0,
        ],
        &[
            one - s,
            one - s,
            0.5 * (t0 + tx + s) + 1.0,
            0.5 * (tx - t0 + s) + 1.0,
            0.5 * (ti + t1 + s) + 1.0,
            0.5 * (t1 - ti + s) + 1.0,
        ],
    )?;
    let den = (t0 - tx + s) * (t0 + tx - s) * (ti + t1 - s);
    if den.norm() < DENOMINATOR_TOL {
        return Err(Error::SingularDenominator(
            "(theta0-thetax+sigma)(theta0+thetax-sigma)(theta_inf+theta1-sigma)",
        ));
    }
    let calf = g * 4.0 * s * (ti + t1 + s) / den;
    Ok(GBlock {
        xi,
        xi1,
        omega,
        omega1,
        calf,
        v: v_of(theta, s),
        v1: v_of(theta, -s),
    })
}

/// The six coefficients of the inverse connection formula.
pub fn g_coefficients(theta: &ThetaParams, sigma: C64) -> Result<GCoefficients> {
    let sin_s = (PI * sigma).sin();
    let sx = (PI * theta.thetax).sin();
    let s1 = (PI * theta.theta1).sin();
    let s0 = (PI * theta.theta0).sin();
    let cx = (PI * theta.thetax).cos();
    let c1 = (PI * theta.theta1).cos();
    let c0 = (PI * theta.theta0).cos();
    for (v, name) in [
        (sin_s, "sin(pi sigma)"),
        (sx, "sin(pi theta_x)"),
        (s1, "sin(pi theta_1)"),
    ] {
        if v.norm() < DENOMINATOR_TOL {
            return Err(Error::SingularDenominator(name));
        }
    }
    let b = g_block(theta, sigma)?;
    if b.omega.norm() < DENOMINATOR_TOL {
        return Err(Error::SingularDenominator("Omega"));
    }
    if b.omega1.norm() < DENOMINATOR_TOL {
        return Err(Error::SingularDenominator("Omega_1"));
    }
    if b.calf.norm() < DENOMINATOR_TOL {
        return Err(Error::SingularDenominator("calF"));
    }
    let g2 = 2.0 * (b.omega * cx * c1 - b.xi * sx * s1) / (sin_s * sin_s * sx * s1);
    let g5 = 2.0 * (c1 * c0 + b.xi1 / b.omega1 * s1 * s0);
    let g1 = -(sx * s1 / b.omega) * b.v1 / b.calf;
    let g3 = -(sx * s1 / b.omega) * b.v * b.calf;
    let k = s0 / sx * b.omega / b.omega1;
    let g4 = -(I * PI * sigma).exp() * k * g1;
    let g6 = -(-I * PI * sigma).exp() * k * g3;
    Ok(GCoefficients([g1, g2, g3, g4, g5, g6]))
}

/// Traces `(p0x, p01, px1)` reconstructed from `(σ, r)`; `p_μ` from θ.
pub fn traces_from_r(theta: &ThetaParams, sigma: C64, r: C64) -> Result<MonodromyTraces> {
    if r.norm() == 0.0 {
        return Err(Error::ZeroR);
    }
    let GCoefficients([g1, g2, g3, g4, g5, g6]) = g_coefficients(theta, sigma)?;
    let px1 = g1 / r + g2 + g3 * r;
    let p01 = g4 / r + g5 + g6 * r;
    Ok(MonodromyTraces::from_theta(theta, trace_of(sigma), p01, px1))
}

/// The integration constant ℛ for `Re σ = 1`, `σ ≠ 1`, as printed:
///
/// ```text
/// ℛ = (θ∞−θ1−σ)(θ∞+θ1−2+σ)(θ0+θx+σ) / [4(1−σ)(θ0+θx+2−σ)] · 1/F*
/// ```
pub fn r_inverse_oscillatory(theta: &ThetaParams, sigma: C64, p01: C64, px1: C64) -> Result<C64> {
    let ThetaParams {
        theta0: t0,
        thetax: tx,
        theta1: t1,
        thetainf: ti,
    } = *theta;
    let s = sigma;
    let two = C64::new(2.0, 0.0);
    let g = gamma_ratio(
        &[
            two - s,
            two - s,
            0.5 * (ti + t1 + s),
            0.5 * (t1 - ti + s) + 1.0,
            0.5 * (t0 + tx + s) + 1.0,
            0.5 * (tx - t0 + s),
        ],
        &[
            s,
            s,
            0.5 * (ti + t1 - s) + 1.0,
            0.5 * (t1 - ti - s) + 2.0,
            0.5 * (t0 + tx - s) + 2.0,
            0.5 * (tx - t0 - s) + 1.0,
        ],
    )?;
    let (c0, cx, c1, ci) = (
        (PI * t0).cos(),
        (PI * tx).cos(),
        (PI * t1).cos(),
        (PI * ti).cos(),
    );
    let sin_s = (PI * s).sin();
    let u = -(-I * PI * s).exp() * (0.5 * I * sin_s * px1 + cx * ci + c0 * c1)
        - 0.5 * I * sin_s * p01
        + cx * c1
        + ci * c0;
    let v = 4.0
        * s_half(t0 + tx + s)
        * s_half(t0 - tx - s)
        * s_half(ti + t1 + s)
        * s_half(ti - t1 - s);
    let den = 4.0 * (1.0 - s) * (t0 + tx + 2.0 - s);
    check_denominator(den, "4 (1 - sigma)(theta0 + thetax + 2 - sigma)")?;
    check_denominator(u, "calU")?;
    check_denominator(v, "calV")?;
    let fstar = g * v / u;
    let pref = (ti - t1 - s) * (ti + t1 - 2.0 + s) * (t0 + tx + s) / den;
    Ok(pref / fstar)
}

/// Traces from `(σ, r)` for `Re σ = 1`, with `G*_i = G_i(θ∞−1, θ1, θx, θ0+1; 1−σ)`:
/// `px1 = G*1/r + G*2 + G*3 r`, `p01 = −(G*4/r + G*5 + G*6 r)`.
pub fn traces_from_r_inverse(theta: &ThetaParams, sigma: C64, r: C64) -> Result<MonodromyTraces> {
    if r.norm() == 0.0 {
        return Err(Error::ZeroR);
    }
    let star = theta.fractional_linear()?;
    let GCoefficients([g1, g2, g3, g4, g5, g6]) = g_coefficients(&star, 1.0 - sigma)?;
    let px1 = g1 / r + g2 + g3 * r;
    let p01 = -(g4 / r + g5 + g6 * r);
    Ok(MonodromyTraces::from_theta(theta, trace_of(sigma), p01, px1))
}

fn frobenius_checks(thetainf: C64, sigma: C64) -> Result<()> {
    if sigma.norm() < DENOMINATOR_TOL {
        return Err(non_generic("sigma = 0".into()));
    }
    for sign in [1.0, -1.0] {
        let d = 0.5 * (sigma - sign * thetainf);
        if (d - d.re.round()).norm() < GAMMA_POLE_TOL {
            return Err(non_generic(format!(
                "sigma = {sigma} equals ±theta_inf + 2m"
            )));
        }
    }
    Ok(())
}

/// `r` for `θ0 = θx = θ1 = 0`:
///
/// ```text
/// r = σ 𝒢² 𝓕² / sin²πσ · [(1+cos πθ∞)(1−e^{iπσ}) + (i/2) sin πσ (p01 + px1 e^{iπσ})]
/// 𝒢 = 4^{−σ} Γ((1−σ)/2)² / [Γ(1−θ∞/2−σ/2) Γ(θ∞/2−σ/2)],  𝓕 = cos²(πσ/2)/(cos πσ − cos πθ∞)
/// ```
pub fn frobenius_r(thetainf: C64, sigma: C64, p01: C64, px1: C64) -> Result<C64> {
    frobenius_checks(thetainf, sigma)?;
    let s = sigma;
    let calg = (-s * 4f64.ln()).exp()
        * gamma_ratio(
            &[0.5 * (1.0 - s), 0.5 * (1.0 - s)],
            &[1.0 - 0.5 * thetainf - 0.5 * s, 0.5 * thetainf - 0.5 * s],
        )?;
    let cos_half = (0.5 * PI * s).cos();
    let den = (PI * s).cos() - (PI * thetainf).cos();
    check_denominator(den, "cos(pi sigma) - cos(pi theta_inf)")?;
    let calf = cos_half * cos_half / den;
    let sin_s = (PI * s).sin();
    check_denominator(sin_s, "sin(pi sigma)")?;
    let e = (I * PI * s).exp();
    let bracket =
        (1.0 + (PI * thetainf).cos()) * (1.0 - e) + 0.5 * I * sin_s * (p01 + px1 * e);
    Ok(s * calg * calg * calf * calf / (sin_s * sin_s) * bracket)
}

/// ℛ for `θ0 = θx = θ1 = 0`, `Re σ = 1`:
///
/// ```text
/// ℛ = 16^σ Γ²(1+(θ∞−σ)/2) Γ²(2−(θ∞+σ)/2) / [4(1−σ)³ sin²πσ Γ⁴((1−σ)/2)]
///     · [(1+cos πθ∞)(1−e^{−iπσ}) − (i/2) sin πσ (p01 + px1 e^{−iπσ})]
/// ```
pub fn frobenius_r_inverse(thetainf: C64, sigma: C64, p01: C64, px1: C64) -> Result<C64> {
    let s = sigma;
    let one_minus = 1.0 - s;
    check_denominator(one_minus, "1 - sigma")?;
    let h = 0.5 * (1.0 - s);
    let g = gamma_ratio(
        &[
            1.0 + 0.5 * (thetainf - s),
            1.0 + 0.5 * (thetainf - s),
            2.0 - 0.5 * (thetainf + s),
            2.0 - 0.5 * (thetainf + s),
        ],
        &[h, h, h, h],
    )?;
    let sin_s = (PI * s).sin();
    check_denominator(sin_s, "sin(pi sigma)")?;
    let e = (-I * PI * s).exp();
    let bracket =
        (1.0 + (PI * thetainf).cos()) * (1.0 - e) - 0.5 * I * sin_s * (p01 + px1 * e);
    let pref = (s * 16f64.ln()).exp() / (4.0 * one_minus * one_minus * one_minus * sin_s * sin_s);
    Ok(pref * g * bracket)
}

/// True when σ is within [`DEGENERATE_TOL`] of `±(θ0 ± θx)`.
pub fn is_degenerate(theta: &ThetaParams, sigma: C64) -> bool {
    degenerate_values(theta)
        .iter()
        .any(|d| (sigma - d).norm() < DEGENERATE_TOL)
}

fn degenerate_values(theta: &ThetaParams) -> [C64; 4] {
    let (t0, tx) = (theta.theta0, theta.thetax);
    [t0 + tx, -(t0 + tx), t0 - tx, tx - t0]
}

/// Evaluates `f` at σ, or — when σ sits on a degenerate value where the
/// printed formula is 0/0 — as the mean of `f(σ ± h)`, which converges to
/// the finite limit with error O(h²).
fn with_degenerate_limit(
    theta_check: &ThetaParams,
    sigma: C64,
    f: impl Fn(C64) -> Result<C64>,
) -> Result<(C64, bool)> {
    if !is_degenerate(theta_check, sigma) {
        return Ok((f(sigma)?, false));
    }
    let h = C64::new(DEGENERATE_TOL, 0.0);
    let nearest = degenerate_values(theta_check)
        .into_iter()
        .min_by(|a, b| (sigma - a).norm().total_cmp(&(sigma - b).norm()))
        .unwrap();
    let plus = f(nearest + h)?;
    let minus = f(nearest - h)?;
    Ok((0.5 * (plus + minus), true))
}

fn branch(theta: &ThetaParams, traces: &MonodromyTraces, point: Point) -> Result<BranchData> {
    let local = point.local_theta(theta);
    let (pij, arg01, argx1) = point.local_traces(traces);
    let sigma = sigma_from_trace(pij);
    let label = |e: Error| match e {
        Error::NonGenericData { point: None, detail } => Error::NonGenericData {
            point: Some(point),
            detail,
        },
        other => other,
    };
    let s = sigma.sigma;
    let mut out = BranchData {
        point,
        sigma,
        r: C64::new(0.0, 0.0),
        a: None,
        big_a: None,
        big_b: None,
        phi: None,
        reduced_precision: false,
    };
    match sigma.regime {
        Regime::Generic | Regime::Oscillatory => {
            let (r, reduced) =
                with_degenerate_limit(&local, s, |z| r_generic(&local, z, arg01, argx1))
                    .map_err(label)?;
            out.r = r;
            out.reduced_precision = reduced;
            if sigma.regime == Regime::Generic {
                out.a = Some(amplitude_a(&local, s, r));
            } else {
                let (a, b) = coefficients_ab(&local, &sigma)?;
                out.big_a = Some(a);
                out.big_b = Some(b);
                if a.norm() > DENOMINATOR_TOL {
                    out.phi = Some(I * (2.0 * r / (s * a)).ln());
                }
            }
        }
        Regime::InverseOscillatory => {
            let star = local.fractional_linear()?;
            let (r, reduced) = with_degenerate_limit(&star, 1.0 - s, |z| {
                r_inverse_oscillatory(&local, 1.0 - z, arg01, argx1)
            })
            .map_err(label)?;
            out.r = r;
            out.reduced_precision = reduced;
            let (a, b) = coefficients_ab(&local, &sigma)?;
            out.big_a = Some(a);
            out.big_b = Some(b);
            if a.norm() > DENOMINATOR_TOL {
                out.phi = Some(I * (2.0 * r / ((1.0 - s) * a)).ln());
            }
        }
        regime @ (Regime::LogZero | Regime::LogOne) => {
            return Err(Error::UnsupportedRegime { point, regime });
        }
    }
    Ok(out)
}

/// Integration constants at `x = 0, 1, ∞` from one set of traces.
pub fn connect(theta: &ThetaParams, traces: &MonodromyTraces) -> Result<ConnectionResult> {
    Ok(ConnectionResult {
        at0: branch(theta, traces, Point::Zero)?,
        at1: branch(theta, traces, Point::One)?,
        at_inf: branch(theta, traces, Point::Infinity)?,
    })
}

/// Branch at a single point (used by the series and oracle modules).
pub fn connect_at(theta: &ThetaParams, traces: &MonodromyTraces, point: Point) -> Result<BranchData> {
    branch(theta, traces, point)
}

impl BranchData {
    /// Re-derives the regime invariant from the stored constants.
    pub fn self_check(&self, theta: &ThetaParams) -> Result<()> {
        let local = self.point.local_theta(theta);
        let s = self.sigma.sigma;
        let close = |a: C64, b: C64| (a - b).norm() <= 1e-8 * (1.0 + a.norm().max(b.norm()));
        let fail = |what: &str| Err(Error::InternalInconsistency(format!("{what} at {}", self.point)));
        match self.sigma.regime {
            Regime::Generic => match self.a {
                Some(a) if close(a, amplitude_a(&local, s, self.r)) => Ok(()),
                _ => fail("generic amplitude a"),
            },
            Regime::Oscillatory => {
                let (a, b) = (self.big_a.unwrap_or_default(), self.big_b.unwrap_or_default());
                let t0 = local.theta0;
                if !close(a * a + b * b, t0 * t0 / (s * s)) {
                    return fail("A^2 + B^2 normalisation");
                }
                match self.phi {
                    Some(phi) => {
                        let e = (-I * phi).exp();
                        if close(e, 2.0 * self.r / (s * a)) {
                            Ok(())
                        } else {
                            fail("phi")
                        }
                    }
                    None if a.norm() <= DENOMINATOR_TOL => Ok(()),
                    None => fail("missing phi"),
                }
            }
            Regime::InverseOscillatory => {
                let (a, b) = (self.big_a.unwrap_or_default(), self.big_b.unwrap_or_default());
                let ti = local.thetainf - 1.0;
                let om = 1.0 - s;
                if !close(a * a + b * b, ti * ti / (om * om)) {
                    return fail("A^2 + B^2 normalisation");
                }
                match self.phi {
                    Some(phi) => {
                        let e = (-I * phi).exp();
                        if close(e, 2.0 * self.r / (om * a)) {
                            Ok(())
                        } else {
                            fail("phi")
                        }
                    }
                    None if a.norm() <= DENOMINATOR_TOL => Ok(()),
                    None => fail("missing phi"),
                }
            }
            regime => Err(Error::UnsupportedRegime {
                point: self.point,
                regime,
            }),
        }
    }
}

/// Which printed leading form a [`LeadingBehavior`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeadingCase {
    /// `a t^{1−σ} + B t − (r/σ) t^{1+σ}`
    SmallPower,
    /// σ = ±(θ0 ± θx): `B t − (r/σ) t^{1+σ}`
    SmallPowerDegenerate,
    /// `t{iA sin(iσ ln t + φ) + B}`, expanded into powers
    Oscillatory,
    OscillatoryDegenerate,
    /// `1/{iA sin(i(1−σ) ln t + φ) + B}`, expanded into powers
    InverseOscillatory,
    InverseOscillatoryDegenerate,
    /// σ = 0, θ0² ≠ θx²
    LogZeroGeneral,
    /// σ = 0, θ0² = θx²: `t(r + θ0 ln t)`
    LogZeroReducible,
    /// σ = 1, α ≠ γ
    LogOneGeneral,
    /// σ = 1, α = γ
    LogOneReducible,
    /// Taylor basic expansion ii): `1/√(2α) + r t`
    TaylorBasicII,
    /// Taylor basic expansion iii): `r + (1−r)(δ−β) t`
    TaylorBasicIII,
    /// Transformed expansion II): `θ0/(θ0 ± θx) t + r t²`
    TaylorTransformedII,
    /// Transformed expansion III): `r t + r(r−1)/2 (2γ−2α−1) t²`
    TaylorTransformedIII,
}

/// One term `P(r) · t^{exponent} · (ln t)^{log_power}`, with `P` a
/// polynomial in the integration constant (ascending coefficients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingTerm {
    pub coefficient: Vec<C64>,
    pub exponent: C64,
    pub log_power: i32,
}

impl LeadingTerm {
    fn numeric(coefficient: C64, exponent: C64) -> Self {
        LeadingTerm {
            coefficient: vec![coefficient],
            exponent,
            log_power: 0,
        }
    }
}

/// Symbolic leading behaviour of a branch in its local variable `t`.
///
/// The local value is `Σ terms` (or its reciprocal when `reciprocal`), and
/// `y(x)` follows from [`Point::to_global`].  When `symbolic_r` is set, the
/// integration constant is not parametrised by monodromy data and `r` is
/// whatever the caller stored in the branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingBehavior {
    pub point: Point,
    pub case: LeadingCase,
    pub reciprocal: bool,
    pub terms: Vec<LeadingTerm>,
    pub symbolic_r: bool,
    pub r: C64,
}

impl LeadingBehavior {
    /// Evaluates the leading form at `x` (principal branches in `t`).
    pub fn evaluate(&self, x: C64) -> C64 {
        let t = self.point.local_variable(x);
        let l = t.ln();
        let mut s = C64::new(0.0, 0.0);
        for term in &self.terms {
            let mut p = C64::new(0.0, 0.0);
            for c in term.coefficient.iter().rev() {
                p = p * self.r + c;
            }
            s += p * (term.exponent * l).exp() * l.powi(term.log_power);
        }
        let inner = if self.reciprocal { 1.0 / s } else { s };
        self.point.to_global(x, inner)
    }
}

fn approx(a: C64, b: C64) -> bool {
    (a - b).norm() < 1e-9
}

/// The printed leading form(s) of a branch.
///
/// Power-type regimes give exactly one entry: the three level-one terms
/// `c_{1,−1}`, `c_{1,0}`, `c_{1,1}` in the local variable (the degenerate
/// σ drops the first).  For σ ∈ {0, 1} every printed logarithmic or Taylor
/// family compatible with the exponents is returned; the trace data alone
/// cannot tell reducible from irreducible cases, so the caller chooses.
pub fn leading_behavior(theta: &ThetaParams, b: &BranchData) -> Vec<LeadingBehavior> {
    let local = b.point.local_theta(theta);
    let s = b.sigma.sigma;
    let r = b.r;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let make = |case, reciprocal, terms, symbolic_r| LeadingBehavior {
        point: b.point,
        case,
        reciprocal,
        terms,
        symbolic_r,
        r,
    };
    let power_terms = |th: &ThetaParams, s: C64, degenerate: bool| -> Vec<LeadingTerm> {
        let (t0, tx) = (th.theta0, th.thetax);
        let bb = (t0 * t0 - tx * tx + s * s) / (2.0 * s * s);
        let mut v = Vec::new();
        if !degenerate {
            v.push(LeadingTerm::numeric(amplitude_a(th, s, r), one - s));
        }
        v.push(LeadingTerm::numeric(bb, one));
        v.push(LeadingTerm::numeric(-r / s, one + s));
        v
    };
    match b.sigma.regime {
        Regime::Generic | Regime::Oscillatory => {
            let deg = is_degenerate(&local, s);
            let case = match (b.sigma.regime, deg) {
                (Regime::Generic, false) => LeadingCase::SmallPower,
                (Regime::Generic, true) => LeadingCase::SmallPowerDegenerate,
                (_, false) => LeadingCase::Oscillatory,
                (_, true) => LeadingCase::OscillatoryDegenerate,
            };
            vec![make(case, false, power_terms(&local, s, deg), false)]
        }
        Regime::InverseOscillatory => {
            // 1/y is the oscillatory form of the transformed solution, with
            // its factor t removed: d_{0m} = c'_{1m}.
            let star = match local.fractional_linear() {
                Ok(t) => t,
                Err(_) => return Vec::new(),
            };
            let sp = 1.0 - s;
            let deg = is_degenerate(&star, sp);
            let terms = power_terms(&star, sp, deg)
                .into_iter()
                .map(|t| LeadingTerm {
                    exponent: t.exponent - 1.0,
                    ..t
                })
                .collect();
            let case = if deg {
                LeadingCase::InverseOscillatoryDegenerate
            } else {
                LeadingCase::InverseOscillatory
            };
            vec![make(case, true, terms, false)]
        }
        Regime::LogZero => {
            let c = local.coefficients();
            let (t0, tx) = (local.theta0, local.thetax);
            let mut out = Vec::new();
            let d = t0 * t0 - tx * tx;
            if d.norm() > 1e-9 {
                // t[k(L + s0 + s1 r)² + c0]
                let k = -0.25 * d;
                let s0 = 2.0 * t0 / d;
                let s1 = 4.0 / d;
                let c0 = t0 * t0 / d;
                out.push(make(
                    LeadingCase::LogZeroGeneral,
                    false,
                    vec![
                        LeadingTerm {
                            coefficient: vec![k],
                            exponent: one,
                            log_power: 2,
                        },
                        LeadingTerm {
                            coefficient: vec![2.0 * k * s0, 2.0 * k * s1],
                            exponent: one,
                            log_power: 1,
                        },
                        LeadingTerm {
                            coefficient: vec![k * s0 * s0 + c0, 2.0 * k * s0 * s1, k * s1 * s1],
                            exponent: one,
                            log_power: 0,
                        },
                    ],
                    true,
                ));
            } else {
                out.push(make(
                    LeadingCase::LogZeroReducible,
                    false,
                    vec![
                        LeadingTerm {
                            coefficient: vec![zero, one],
                            exponent: one,
                            log_power: 0,
                        },
                        LeadingTerm {
                            coefficient: vec![t0],
                            exponent: one,
                            log_power: 1,
                        },
                    ],
                    true,
                ));
                let sa = local.thetainf - 1.0;
                let t1 = local.theta1;
                if c.alpha.norm() > 1e-9 {
                    for (ea, eg) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        if approx(ea * sa + eg * t1, one) {
                            out.push(make(
                                LeadingCase::TaylorBasicII,
                                false,
                                vec![
                                    LeadingTerm::numeric(1.0 / (ea * sa), zero),
                                    LeadingTerm {
                                        coefficient: vec![zero, one],
                                        exponent: one,
                                        log_power: 0,
                                    },
                                ],
                                true,
                            ));
                            break;
                        }
                    }
                }
                if t0.norm() < 1e-9 && tx.norm() < 1e-9 {
                    let k = 0.5 * (2.0 * c.gamma - 2.0 * c.alpha - 1.0);
                    out.push(make(
                        LeadingCase::TaylorTransformedIII,
                        false,
                        vec![
                            LeadingTerm {
                                coefficient: vec![zero, one],
                                exponent: one,
                                log_power: 0,
                            },
                            LeadingTerm {
                                coefficient: vec![zero, -k, k],
                                exponent: C64::new(2.0, 0.0),
                                log_power: 0,
                            },
                        ],
                        true,
                    ));
                }
            }
            out
        }
        Regime::LogOne => {
            let c = local.coefficients();
            let sa = local.thetainf - 1.0;
            let (t0, tx) = (local.theta0, local.thetax);
            let mut out = Vec::new();
            let g = c.gamma - c.alpha;
            if g.norm() > 1e-9 {
                out.push(make(
                    LeadingCase::LogOneGeneral,
                    false,
                    vec![
                        LeadingTerm {
                            coefficient: vec![2.0 / g],
                            exponent: zero,
                            log_power: -2,
                        },
                        LeadingTerm {
                            coefficient: vec![4.0 * sa / (g * g), 8.0 / (g * g)],
                            exponent: zero,
                            log_power: -3,
                        },
                    ],
                    true,
                ));
            } else if sa.norm() > 1e-9 {
                out.push(make(
                    LeadingCase::LogOneReducible,
                    false,
                    vec![
                        LeadingTerm {
                            coefficient: vec![1.0 / sa],
                            exponent: zero,
                            log_power: -1,
                        },
                        LeadingTerm {
                            coefficient: vec![zero, -1.0 / (sa * sa)],
                            exponent: zero,
                            log_power: -2,
                        },
                    ],
                    true,
                ));
            } else {
                let k = c.delta - c.beta;
                out.push(make(
                    LeadingCase::TaylorBasicIII,
                    false,
                    vec![
                        LeadingTerm {
                            coefficient: vec![zero, one],
                            exponent: zero,
                            log_power: 0,
                        },
                        LeadingTerm {
                            coefficient: vec![k, -k],
                            exponent: one,
                            log_power: 0,
                        },
                    ],
                    true,
                ));
            }
            if c.beta.norm() > 1e-9 && g.norm() <= 1e-9 {
                for e in [1.0, -1.0] {
                    let w = t0 + e * tx;
                    if approx(w * w, one) {
                        out.push(make(
                            LeadingCase::TaylorTransformedII,
                            false,
                            vec![
                                LeadingTerm::numeric(t0 / w, one),
                                LeadingTerm {
                                    coefficient: vec![zero, one],
                                    exponent: C64::new(2.0, 0.0),
                                    log_power: 0,
                                },
                            ],
                            true,
                        ));
                        break;
                    }
                }
            }
            out
        }
    }
}
