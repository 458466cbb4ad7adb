//! Trace coordinates on the space of monodromy data.
//!
//! The seven traces `p_μ = Tr M_μ = 2cos πθ_μ` and `p_ij = Tr(M_i M_j)`
//! satisfy one cubic relation.  This module holds the exponents, the
//! traces, the σ ↔ trace dictionary, the braid group action induced by
//! analytic continuation of `x` around 0 and 1, the trace maps attached to
//! the symmetries of PVI, and the x-independent Schlesinger matrices whose
//! spectral structure fixes the leading term of a branch at `x = 0`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::C64;

/// Tolerance that snaps `Re σ` onto the regime boundaries 0 and 1.
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Inputs this close to a boundary (but not on it) carry a warning.
pub const BOUNDARY_WARN: f64 = 1e-6;

/// The exponents θ0, θx, θ1, θ∞ of the Fuchsian system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTheta")]
pub struct ThetaParams {
    pub theta0: C64,
    pub thetax: C64,
    pub theta1: C64,
    pub thetainf: C64,
}

#[derive(Deserialize)]
struct RawTheta {
    theta0: C64,
    thetax: C64,
    theta1: C64,
    thetainf: C64,
}

impl TryFrom<RawTheta> for ThetaParams {
    type Error = Error;
    fn try_from(r: RawTheta) -> Result<Self> {
        ThetaParams::new(r.theta0, r.thetax, r.theta1, r.thetainf)
    }
}

impl ThetaParams {
    /// θ∞ = 0 is rejected: it describes the same equation as θ∞ = 2.
    pub fn new(theta0: C64, thetax: C64, theta1: C64, thetainf: C64) -> Result<Self> {
        if thetainf.norm() == 0.0 {
            return Err(Error::ThetaInfinityZero);
        }
        Ok(ThetaParams {
            theta0,
            thetax,
            theta1,
            thetainf,
        })
    }

    /// Real exponents, for convenience.
    pub fn real(theta0: f64, thetax: f64, theta1: f64, thetainf: f64) -> Result<Self> {
        Self::new(
            C64::new(theta0, 0.0),
            C64::new(thetax, 0.0),
            C64::new(theta1, 0.0),
            C64::new(thetainf, 0.0),
        )
    }

    /// `(α, β, γ, δ)` with θ0² = −2β, θx² = 1 − 2δ, θ1² = 2γ, (θ∞−1)² = 2α.
    pub fn coefficients(&self) -> PviCoefficients {
        let t = self.thetainf - 1.0;
        PviCoefficients {
            alpha: 0.5 * t * t,
            beta: -0.5 * self.theta0 * self.theta0,
            gamma: 0.5 * self.theta1 * self.theta1,
            delta: 0.5 * (1.0 - self.thetax * self.thetax),
        }
    }

    /// `p_μ = 2cos(πθ_μ)` in the order (p0, px, p1, p∞).
    pub fn local_traces(&self) -> [C64; 4] {
        [
            trace_of(self.theta0),
            trace_of(self.thetax),
            trace_of(self.theta1),
            trace_of(self.thetainf),
        ]
    }

    /// Exponents seen from `x = 1`: (θ1, θx, θ0, θ∞).
    pub fn relabel_at_one(&self) -> Self {
        ThetaParams {
            theta0: self.theta1,
            thetax: self.thetax,
            theta1: self.theta0,
            thetainf: self.thetainf,
        }
    }

    /// Exponents seen from `x = ∞`: (θ0, θ1, θx, θ∞).
    pub fn relabel_at_infinity(&self) -> Self {
        ThetaParams {
            theta0: self.theta0,
            thetax: self.theta1,
            theta1: self.thetax,
            thetainf: self.thetainf,
        }
    }

    /// Exponents after `y ↦ x/y`: (θ∞−1, θ1, θx, θ0+1).
    pub fn fractional_linear(&self) -> Result<Self> {
        ThetaParams::new(
            self.thetainf - 1.0,
            self.theta1,
            self.thetax,
            self.theta0 + 1.0,
        )
    }
}

/// The four constants of PVI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PviCoefficients {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

/// Principal square roots; θ∞ = 2 replaces the forbidden θ∞ = 0.
pub fn theta_from_coefficients(c: &PviCoefficients) -> ThetaParams {
    let theta0 = (-2.0 * c.beta).sqrt();
    let thetax = (1.0 - 2.0 * c.delta).sqrt();
    let theta1 = (2.0 * c.gamma).sqrt();
    let mut thetainf = 1.0 + (2.0 * c.alpha).sqrt();
    if thetainf.norm() == 0.0 {
        thetainf = C64::new(2.0, 0.0);
    }
    ThetaParams {
        theta0,
        thetax,
        theta1,
        thetainf,
    }
}

/// The seven trace coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyTraces {
    pub p0: C64,
    pub px: C64,
    pub p1: C64,
    pub pinf: C64,
    pub p0x: C64,
    pub p01: C64,
    pub px1: C64,
}

impl MonodromyTraces {
    /// Fills `p_μ` from the exponents.
    pub fn from_theta(theta: &ThetaParams, p0x: C64, p01: C64, px1: C64) -> Self {
        let [p0, px, p1, pinf] = theta.local_traces();
        MonodromyTraces {
            p0,
            px,
            p1,
            pinf,
            p0x,
            p01,
            px1,
        }
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        [
            self.p0 - o.p0,
            self.px - o.px,
            self.p1 - o.p1,
            self.pinf - o.pinf,
            self.p0x - o.p0x,
            self.p01 - o.p01,
            self.px1 - o.px1,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }
}

/// Asymptotic class of a branch, fixed by `Re σ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Generic,
    Oscillatory,
    InverseOscillatory,
    LogZero,
    LogOne,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Generic => "Generic",
            Regime::Oscillatory => "Oscillatory",
            Regime::InverseOscillatory => "InverseOscillatory",
            Regime::LogZero => "LogZero",
            Regime::LogOne => "LogOne",
        };
        f.write_str(s)
    }
}

impl Regime {
    /// Classifies any σ by its real part (σ need not be canonical).
    pub fn of_sigma(sigma: C64) -> Regime {
        if sigma.norm() < CLASSIFY_TOL {
            Regime::LogZero
        } else if (sigma - 1.0).norm() < CLASSIFY_TOL {
            Regime::LogOne
        } else if sigma.re.abs() < CLASSIFY_TOL {
            Regime::Oscillatory
        } else if (sigma.re - 1.0).abs() < CLASSIFY_TOL {
            Regime::InverseOscillatory
        } else {
            Regime::Generic
        }
    }
}

/// σ on the strip `0 ≤ Re σ ≤ 1` together with its regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponent {
    pub sigma: C64,
    pub regime: Regime,
    /// Set when `Re σ` lies within 1e−6 of 0 or 1 without being snapped.
    #[serde(default)]
    pub boundary_warning: bool,
}

impl CriticalExponent {
    /// Classifies an explicitly given σ without moving it.
    pub fn classify(sigma: C64) -> Self {
        let regime = Regime::of_sigma(sigma);
        let d0 = sigma.re.abs();
        let d1 = (sigma.re - 1.0).abs();
        let boundary_warning = regime == Regime::Generic
            && (d0 < BOUNDARY_WARN || d1 < BOUNDARY_WARN);
        CriticalExponent {
            sigma,
            regime,
            boundary_warning,
        }
    }
}

/// `2cos(πθ)`.
pub fn trace_of(theta: C64) -> C64 {
    2.0 * (PI * theta).cos()
}

/// Solves `2cos(πσ) = p` on `0 ≤ Re σ ≤ 1`.
///
/// The principal arccosine already lands on the strip.  On the boundaries
/// `Re σ ∈ {0, 1}` the real part is snapped exactly and the representative
/// with `Im σ ≥ 0` is chosen (σ ↦ −σ, resp. σ ↦ 2 − σ, leave `y` unchanged).
pub fn sigma_from_trace(p: C64) -> CriticalExponent {
    let mut sigma = (0.5 * p).acos() / PI;
    // The complex arccosine cancels badly for large |p|; Newton on
    // 2cos(πσ) = p restores full relative accuracy.
    for _ in 0..2 {
        let d = -2.0 * PI * (PI * sigma).sin();
        if d.norm() < 1e-8 * (1.0 + p.norm()) {
            break;
        }
        sigma -= (trace_of(sigma) - p) / d;
    }
    // Fold back onto 0 ≤ Re σ ≤ 1 (the arccosine may leave it when p sits
    // on its branch cut with a signed-zero imaginary part).
    sigma -= 2.0 * (0.5 * sigma.re).round();
    if sigma.re < 0.0 {
        sigma = -sigma;
    }
    if sigma.re.abs() < CLASSIFY_TOL {
        sigma.re = 0.0;
        if sigma.im < 0.0 {
            sigma = -sigma;
        }
    } else if (sigma.re - 1.0).abs() < CLASSIFY_TOL {
        sigma.re = 1.0;
        if sigma.im < 0.0 {
            sigma = 2.0 - sigma;
        }
    }
    if sigma.im == 0.0 {
        sigma.im = 0.0; // normalise −0.0
    }
    CriticalExponent::classify(sigma)
}

/// `2cos(πσ)`.
pub fn trace_from_sigma(s: &CriticalExponent) -> C64 {
    trace_of(s.sigma)
}

/// Left-hand side of the cubic relation, grouped as printed.
pub fn cubic_residual(t: &MonodromyTraces) -> C64 {
    let MonodromyTraces {
        p0,
        px,
        p1,
        pinf,
        p0x,
        p01,
        px1,
    } = *t;
    p0x * p0x + p01 * p01 + px1 * px1 + p0x * p01 * px1
        - (p0 * px + p1 * pinf) * p0x
        - (p0 * p1 + px * pinf) * p01
        - (px * p1 + p0 * pinf) * px1
        + p0 * p0
        + p1 * p1
        + px * px
        + pinf * pinf
        + p0 * px * p1 * pinf
        - 4.0
}

/// Continuation of `x` once counter-clockwise around 0.
pub fn braid_around_0(t: &MonodromyTraces) -> MonodromyTraces {
    let MonodromyTraces {
        p0,
        px,
        p1,
        pinf,
        p0x,
        p01,
        px1,
    } = *t;
    MonodromyTraces {
        px1: px1 * (p0x * p0x - 1.0) + p0x * p01 - (pinf * px + p1 * p0) * p0x
            + pinf * p0
            + p1 * px,
        p0x,
        p01: -p01 - px1 * p0x + pinf * px + p1 * p0,
        ..*t
    }
}

/// Continuation of `x` once counter-clockwise around 1.
pub fn braid_around_1(t: &MonodromyTraces) -> MonodromyTraces {
    let MonodromyTraces {
        p0,
        px,
        p1,
        pinf,
        p0x,
        p01,
        px1,
    } = *t;
    MonodromyTraces {
        p01: p01 * (px1 * px1 - 1.0) + p0x * px1 - (pinf * p1 + p0 * px) * px1
            + pinf * px
            + p0 * p1,
        px1,
        p0x: -p0x - p01 * px1 + pinf * p1 + p0 * px,
        ..*t
    }
}

/// Inverse of [`braid_around_0`].
///
/// Eliminating the primed quantities from the forward map leaves two
/// linear relations: `px1 = −p'x1 − p0x p'01 + p∞p0 + p1px`, then `p01`
/// from the second line of the forward map.
pub fn braid_around_0_inverse(t: &MonodromyTraces) -> MonodromyTraces {
    let MonodromyTraces {
        p0,
        px,
        p1,
        pinf,
        p0x,
        p01,
        px1,
    } = *t;
    let px1_old = -px1 - p0x * p01 + pinf * p0 + p1 * px;
    let p01_old = -p01 - px1_old * p0x + pinf * px + p1 * p0;
    MonodromyTraces {
        p01: p01_old,
        px1: px1_old,
        ..*t
    }
}

/// Inverse of [`braid_around_1`].
pub fn braid_around_1_inverse(t: &MonodromyTraces) -> MonodromyTraces {
    let MonodromyTraces {
        p0,
        px,
        p1,
        pinf,
        p0x,
        p01,
        px1,
    } = *t;
    let p01_old = -p01 - px1 * p0x + pinf * px + p0 * p1;
    let p0x_old = -p0x - p01_old * px1 + pinf * p1 + p0 * px;
    MonodromyTraces {
        p01: p01_old,
        p0x: p0x_old,
        ..*t
    }
}

/// Trace map of the symmetry σ01 (θ0 ↔ θ1, `y ↦ 1 − y`, `x ↦ 1 − x`).
pub fn trace_map_sigma01(t: &MonodromyTraces) -> MonodromyTraces {
    let MonodromyTraces {
        p0,
        px,
        p1,
        pinf,
        p0x,
        p01,
        px1,
    } = *t;
    MonodromyTraces {
        p0: p1,
        px,
        p1: p0,
        pinf,
        p01: -p01 - p0x * px1 + pinf * px + p1 * p0,
        p0x: px1,
        px1: p0x,
    }
}

/// Trace map of the symmetry σx1 (θx ↔ θ1, `y ↦ y/x`, `x ↦ 1/x`), forward
/// direction.
///
/// Unlike σ01 this map is not an involution on traces: applying it twice
/// lands on [`braid_around_1_inverse`] of the input (the two loop bases
/// differ by one continuation around 1).  Its inverse is
/// [`trace_map_sigmax1_inverse`].
pub fn trace_map_sigmax1(t: &MonodromyTraces) -> MonodromyTraces {
    let MonodromyTraces {
        p0,
        px,
        p1,
        pinf,
        p0x,
        p01,
        px1,
    } = *t;
    MonodromyTraces {
        p0,
        px: p1,
        p1: px,
        pinf,
        p0x: -p01 - p0x * px1 + pinf * px + p0 * p1,
        p01: p0x,
        px1,
    }
}

/// The printed inverse of the σx1 trace map, written in the primed data.
pub fn trace_map_sigmax1_inverse(t: &MonodromyTraces) -> MonodromyTraces {
    let MonodromyTraces {
        p0,
        px,
        p1,
        pinf,
        p0x,
        p01,
        px1,
    } = *t;
    MonodromyTraces {
        p0,
        px: p1,
        p1: px,
        pinf,
        p01: -p0x - p01 * px1 + pinf * p1 + p0 * px,
        p0x: p01,
        px1,
    }
}

/// Trace map of the fractional linear symmetry `y ↦ x/y`:
/// `(p0, px, p1, p∞; p0x, p01, px1) ↦ (−p∞, p1, px, −p0; −p0x, −p01, px1)`.
pub fn trace_map_fractional_linear(t: &MonodromyTraces) -> MonodromyTraces {
    MonodromyTraces {
        p0: -t.pinf,
        px: t.p1,
        p1: t.px,
        pinf: -t.p0,
        p0x: -t.p0x,
        p01: -t.p01,
        px1: t.px1,
    }
}

/// The x-independent Schlesinger data at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HatMatrices {
    pub hat_a1: Mat2,
    pub lambda: Mat2,
    pub hathat_a0: Mat2,
    pub hathat_ax: Mat2,
    pub g0: Mat2,
    pub sigma: C64,
}

/// Builds `Â1`, `Λ = Â0 + Âx`, `G0`, and the conjugated `Â̂0`, `Â̂x` from
/// the exponents and the two constants `r1`, `r`.
pub fn build_hat_matrices(theta: &ThetaParams, sigma: C64, r1: C64, r: C64) -> Result<HatMatrices> {
    let ThetaParams {
        theta0: t0,
        thetax: tx,
        theta1: t1,
        thetainf: ti,
    } = *theta;
    if ti.norm() < 1e-14 {
        return Err(Error::SingularInput("theta_inf"));
    }
    if sigma.norm() < 1e-14 {
        return Err(Error::SingularInput("sigma"));
    }
    if r.norm() < 1e-300 {
        return Err(Error::SingularInput("r"));
    }
    if r1.norm() < 1e-300 {
        return Err(Error::SingularInput("r1"));
    }
    let s2 = sigma * sigma;

    let d1 = (s2 - ti * ti - t1 * t1) / (4.0 * ti);
    let q1 = (s2 - (t1 - ti) * (t1 - ti)) * (s2 - (t1 + ti) * (t1 + ti)) / (16.0 * ti * ti);
    let hat_a1 = Mat2::new(d1, -r1, q1 / r1, -d1);

    let dl = (t1 * t1 - s2 - ti * ti) / (4.0 * ti);
    let lambda = Mat2::new(dl, r1, -q1 / r1, -dl);

    let g0 = Mat2::new(
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        ((ti + sigma) * (ti + sigma) - t1 * t1) / (4.0 * ti * r1),
        ((ti - sigma) * (ti - sigma) - t1 * t1) / (4.0 * ti * r1),
    );

    let d0 = (t0 * t0 - tx * tx + s2) / (4.0 * sigma);
    let q0 = (s2 - (t0 - tx) * (t0 - tx)) * (s2 - (t0 + tx) * (t0 + tx)) / (16.0 * s2);
    let hathat_a0 = Mat2::new(d0, r, -q0 / r, -d0);

    let dx = (s2 + tx * tx - t0 * t0) / (4.0 * sigma);
    let hathat_ax = Mat2::new(dx, -r, q0 / r, -dx);

    Ok(HatMatrices {
        hat_a1,
        lambda,
        hathat_a0,
        hathat_ax,
        g0,
        sigma,
    })
}

impl HatMatrices {
    /// `G0 x^{σσ3/2} M x^{−σσ3/2} G0⁻¹`: the leading behaviour of the
    /// Schlesinger matrices attached to 0 and x.
    pub fn conjugated(&self, m: &Mat2, x: C64) -> Result<Mat2> {
        let h = (0.5 * self.sigma * x.ln()).exp();
        let d = Mat2::diag(h, 1.0 / h);
        let di = Mat2::diag(1.0 / h, h);
        let gi = self
            .g0
            .inverse()
            .ok_or(Error::SingularInput("det G0"))?;
        Ok(self.g0 * d * *m * di * gi)
    }

    /// Leading approximation of `y(x)` from `A(λ)_{12} = 0`, with `A0`
    /// and `A1` replaced by their leading matrices.
    pub fn leading_y(&self, x: C64) -> Result<C64> {
        let a0 = self.conjugated(&self.hathat_a0, x)?;
        let a012 = a0.entry(0, 1);
        let a112 = self.hat_a1.entry(0, 1);
        let den = x * (a012 + a112) - a112;
        if den.norm() == 0.0 {
            return Err(Error::NearPole("A12 denominator".into()));
        }
        Ok(x * a012 / den)
    }
}
