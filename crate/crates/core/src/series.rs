//! Full critical expansions
//!
//! ```text
//! y(x) = Σ_{n≥1} xⁿ Σ_{|m|≤n} c_{nm} x^{mσ}                 (0 ≤ Re σ < 1)
//! 1/y(x) = Σ_{n≥0} xⁿ Σ_{|m|≤n+1} d_{nm} x^{m(1−σ)}        (Re σ = 1)
//! ```
//!
//! The coefficients are produced numerically by substituting the truncated
//! series into the numerator of PVI (the equation multiplied by
//! `2y(1−y)(y−x)x²(x−1)²`) and solving level by level.  Level `l` of the
//! numerator is a Laurent polynomial `Σ_k ξ_{lk} x^{kσ}`; for `l ≥ 4` it is
//! affine in the unknowns `c_{l−2,·}`, so each level is one small linear
//! solve.  The equations that are not used to fix a coefficient must vanish
//! on their own; they are checked every time, so every expansion audits
//! itself.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::connection::{connect_at, Point};
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::monodromy::{MonodromyTraces, PviCoefficients, Regime, ThetaParams};
use crate::{C64, I};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 8;
/// Largest truncation order accepted by [`expand`].
pub const ORDER_CAP: usize = 12;
/// Tolerance for the self-audit of unused equations (relative).
pub const AUDIT_TOL: f64 = 1e-10;
/// Distance from an integer below which σ is rejected.
pub const INTEGER_SIGMA_TOL: f64 = 1e-8;

/// Evaluation-domain settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesConfig {
    /// Largest admissible `|t|` in the local variable.
    pub radius: f64,
    /// Bound on the oscillatory small quantity `|e^{−2iφ} t^{σ}|`, which in
    /// coefficient terms is `|c_{11}/c_{1,−1} · t^{σ}|`.  `None` disables it.
    pub oscillatory_bound: Option<f64>,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            radius: 0.05,
            oscillatory_bound: Some(0.5),
        }
    }
}

impl SeriesConfig {
    /// No domain checks at all (for diagnostics and slope studies).
    pub fn unchecked() -> Self {
        SeriesConfig {
            radius: f64::INFINITY,
            oscillatory_bound: None,
        }
    }
}

/// One coefficient of a doubly graded table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub n: i32,
    pub m: i32,
    pub value: C64,
}

/// A truncated critical expansion at one of the three singular points.
///
/// `theta` holds the global exponents; the recursion ran on the relabelled
/// ones.  For [`Regime::InverseOscillatory`] the table is `d_{nm}` (the
/// series of `1/ỹ`) with powers `t^{m(1−σ)}`; otherwise it is `c_{nm}` with
/// powers `t^{mσ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesExpansion {
    pub point: Point,
    pub regime: Regime,
    pub theta: ThetaParams,
    pub sigma: C64,
    pub r: C64,
    pub order: usize,
    pub coeffs: Vec<Coefficient>,
    /// Largest relative residual among the audited equations.
    #[serde(default)]
    pub audit_residual: f64,
}

// ---------------------------------------------------------------------------
// Doubly graded truncated algebra

/// Elements `Σ_{n ≤ L, |m| ≤ n} a_{nm} xⁿ x^{mσ}`, stored level by level.
#[derive(Clone, Debug)]
struct Graded {
    levels: usize,
    data: Vec<C64>,
}

#[inline]
fn idx(n: usize, m: i32) -> usize {
    n * n + (m + n as i32) as usize
}

impl Graded {
    fn zero(levels: usize) -> Self {
        Graded {
            levels,
            data: vec![C64::new(0.0, 0.0); (levels + 1) * (levels + 1)],
        }
    }

    /// The monomial `x`.
    fn x(levels: usize) -> Self {
        let mut g = Graded::zero(levels);
        if levels >= 1 {
            g.data[idx(1, 0)] = C64::new(1.0, 0.0);
        }
        g
    }

    fn get(&self, n: usize, m: i32) -> C64 {
        if n > self.levels || m.unsigned_abs() as usize > n {
            C64::new(0.0, 0.0)
        } else {
            self.data[idx(n, m)]
        }
    }

    fn set(&mut self, n: usize, m: i32, v: C64) {
        if n <= self.levels {
            self.data[idx(n, m)] = v;
        }
    }

    fn add(&self, o: &Graded) -> Graded {
        let mut g = self.clone();
        for (a, b) in g.data.iter_mut().zip(&o.data) {
            *a += b;
        }
        g
    }

    fn sub(&self, o: &Graded) -> Graded {
        let mut g = self.clone();
        for (a, b) in g.data.iter_mut().zip(&o.data) {
            *a -= b;
        }
        g
    }

    fn scale(&self, s: C64) -> Graded {
        let mut g = self.clone();
        for a in g.data.iter_mut() {
            *a *= s;
        }
        g
    }

    fn add_const(&self, v: f64) -> Graded {
        let mut g = self.clone();
        g.data[0] += v;
        g
    }

    fn mul(&self, o: &Graded) -> Graded {
        let l = self.levels;
        let mut g = Graded::zero(l);
        for n1 in 0..=l {
            for m1 in -(n1 as i32)..=n1 as i32 {
                let a = self.data[idx(n1, m1)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for n2 in 0..=l - n1 {
                    for m2 in -(n2 as i32)..=n2 as i32 {
                        let b = o.data[idx(n2, m2)];
                        g.data[idx(n1 + n2, m1 + m2)] += a * b;
                    }
                }
            }
        }
        g
    }

    /// The Euler operator `x d/dx`: multiplies `a_{nm}` by `n + mσ`.
    fn euler(&self, sigma: C64) -> Graded {
        let mut g = self.clone();
        for n in 0..=self.levels {
            for m in -(n as i32)..=n as i32 {
                g.data[idx(n, m)] *= n as f64 + m as f64 * sigma;
            }
        }
        g
    }
}

/// The PVI numerator `2P(x−1)²ỹ″ − (x−1)²ỹ′²Q + 2ỹ′[…] − 2[αP² + …]`
/// with `ỹ′ = x y′`, `ỹ″ = x² y″`, `P = y(y−1)(y−x)`.
fn numerator(y: &Graded, sigma: C64, c: &PviCoefficients) -> Graded {
    let l = y.levels;
    let x = Graded::x(l);
    let xm1 = x.add_const(-1.0);
    let ym1 = y.add_const(-1.0);
    let ymx = y.sub(&x);
    let d1 = y.euler(sigma);
    let d2 = d1.euler(sigma).sub(&d1);
    let yy1 = y.mul(&ym1);
    let p = yy1.mul(&ymx);
    let xm1sq = xm1.mul(&xm1);
    let q = ym1.mul(&ymx).add(&y.mul(&ymx)).add(&yy1);

    let t1 = p.mul(&xm1sq).mul(&d2).scale(C64::new(2.0, 0.0));
    let t2 = xm1sq.mul(&d1).mul(&d1).mul(&q);
    let two_x_m1 = x.scale(C64::new(2.0, 0.0)).add_const(-1.0);
    let inner = p
        .mul(&xm1)
        .mul(&two_x_m1)
        .add(&x.mul(&xm1sq).mul(&yy1));
    let t3 = d1.mul(&inner).scale(C64::new(2.0, 0.0));

    let ym1sq = ym1.mul(&ym1);
    let ymxsq = ymx.mul(&ymx);
    let ysq = y.mul(y);
    let bracket = p
        .mul(&p)
        .scale(c.alpha)
        .add(&x.mul(&ym1sq).mul(&ymxsq).scale(c.beta))
        .add(&xm1.mul(&ysq).mul(&ymxsq).scale(c.gamma))
        .add(&x.mul(&xm1).mul(&ysq).mul(&ym1sq).scale(c.delta));
    t1.sub(&t2).add(&t3).sub(&bracket.scale(C64::new(2.0, 0.0)))
}

/// Running-error bound for [`numerator`]: the same expression with every
/// coefficient replaced by its modulus and every subtraction by an
/// addition.  Its level slices bound the magnitude of the terms that cancel
/// in the true numerator, which is the scale roundoff is measured against.
fn numerator_bound(y: &Graded, sigma: C64, c: &PviCoefficients) -> Graded {
    let l = y.levels;
    let mut ya = Graded::zero(l);
    let mut d1 = Graded::zero(l);
    let mut d2 = Graded::zero(l);
    for n in 0..=l {
        for m in -(n as i32)..=n as i32 {
            let v = y.get(n, m).norm();
            let e = n as f64 + m as f64 * sigma;
            ya.set(n, m, C64::new(v, 0.0));
            d1.set(n, m, C64::new(v * e.norm(), 0.0));
            d2.set(n, m, C64::new(v * (e * (e - 1.0)).norm(), 0.0));
        }
    }
    let x = Graded::x(l);
    let two = C64::new(2.0, 0.0);
    let xp1 = x.add_const(1.0);
    let yp1 = ya.add_const(1.0);
    let ypx = ya.add(&x);
    let yy1 = ya.mul(&yp1);
    let p = yy1.mul(&ypx);
    let xp1sq = xp1.mul(&xp1);
    let q = yp1.mul(&ypx).add(&ya.mul(&ypx)).add(&yy1);
    let t1 = p.mul(&xp1sq).mul(&d2).scale(two);
    let t2 = xp1sq.mul(&d1).mul(&d1).mul(&q);
    let inner = p
        .mul(&xp1)
        .mul(&x.scale(two).add_const(1.0))
        .add(&x.mul(&xp1sq).mul(&yy1));
    let t3 = d1.mul(&inner).scale(two);
    let yp1sq = yp1.mul(&yp1);
    let ypxsq = ypx.mul(&ypx);
    let ysq = ya.mul(&ya);
    let abs = |z: C64| C64::new(z.norm(), 0.0);
    let bracket = p
        .mul(&p)
        .scale(abs(c.alpha))
        .add(&x.mul(&yp1sq).mul(&ypxsq).scale(abs(c.beta)))
        .add(&xp1.mul(&ysq).mul(&ypxsq).scale(abs(c.gamma)))
        .add(&x.mul(&xp1).mul(&ysq).mul(&yp1sq).scale(abs(c.delta)));
    t1.add(&t2).add(&t3).add(&bracket.scale(two))
}

fn slice_max(g: &Graded, l: usize) -> f64 {
    level_slice(g, l).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn level_slice(g: &Graded, l: usize) -> Vec<C64> {
    (-(l as i32)..=l as i32).map(|k| g.get(l, k)).collect()
}

fn check_sigma(sigma: C64) -> Result<()> {
    if (sigma.re - sigma.re.round()).abs() < INTEGER_SIGMA_TOL && sigma.im.abs() < INTEGER_SIGMA_TOL {
        return Err(Error::NearIntegerSigma(sigma));
    }
    Ok(())
}

/// Checks one unused equation and returns its relative residual.
fn audit(residual: C64, scale: f64, what: impl FnOnce() -> String) -> Result<f64> {
    let scale = scale.max(f64::MIN_POSITIVE);
    if residual.norm() > AUDIT_TOL * scale || !residual.re.is_finite() {
        return Err(Error::InternalInconsistency(format!(
            "{}: |xi| = {:.3e}, scale {:.3e}",
            what(),
            residual.norm(),
            scale
        )));
    }
    Ok(residual.norm() / scale)
}

/// Runs the recursion at `x = 0` for the given (local) exponents.
/// The table is graded, `c_{nm}(λr) = λ^m c_{nm}(r)`, so it is computed at
/// the normalised `r̂` with `|c_11| = 1` and rescaled.  Large `|r/σ|`
/// otherwise spreads the unknowns of one level over many orders of
/// magnitude and the least-squares solve loses digits.
fn recursion(theta: &ThetaParams, sigma: C64, r: C64, order: usize) -> Result<(Graded, f64)> {
    if r.norm() == 0.0 {
        return Err(Error::ZeroR);
    }
    let lambda = (r / sigma).norm();
    let (mut y, worst) = recursion_normalised(theta, sigma, r / lambda, order)?;
    y.set(1, 1, -r / sigma);
    for n in 2..=order {
        for m in -(n as i32)..=n as i32 {
            y.set(n, m, y.get(n, m) * lambda.powi(m));
        }
    }
    for m in -1..=0 {
        y.set(1, m, y.get(1, m) * lambda.powi(m));
    }
    Ok((y, worst))
}

fn recursion_normalised(theta: &ThetaParams, sigma: C64, r: C64, order: usize) -> Result<(Graded, f64)> {
    if order == 0 || order > ORDER_CAP + 1 {
        return Err(Error::InvalidOrder {
            order,
            cap: ORDER_CAP,
        });
    }
    check_sigma(sigma)?;
    if r.norm() == 0.0 {
        return Err(Error::ZeroR);
    }
    let coef = theta.coefficients();
    let mut y = Graded::zero(order);
    y.set(1, 1, -r / sigma);

    // Level 3: ξ32 is affine in c10, then ξ31 is affine in c1,−1.
    let level3 = |y: &Graded| -> Vec<C64> {
        let mut t = Graded::zero(3);
        for n in 1..=order.min(3) {
            for m in -(n as i32)..=n as i32 {
                t.set(n, m, y.get(n, m));
            }
        }
        level_slice(&numerator(&t, sigma, &coef), 3)
    };
    let affine_solve = |y: &mut Graded, m: i32, k: i32| -> Result<()> {
        y.set(1, m, C64::new(0.0, 0.0));
        let b = level3(y)[(k + 3) as usize];
        y.set(1, m, C64::new(1.0, 0.0));
        let col = level3(y)[(k + 3) as usize] - b;
        if col.norm() <= 1e-14 * b.norm().max(1.0) {
            return Err(Error::InternalInconsistency(format!(
                "level 3: xi_(3,{k}) does not determine c_(1,{m})"
            )));
        }
        let v = -b / col;
        y.set(1, m, v);
        Ok(())
    };
    affine_solve(&mut y, 0, 2)?;
    affine_solve(&mut y, -1, 1)?;
    let xi3 = level3(&y);
    let mut t3 = Graded::zero(3);
    for m in -1..=1 {
        t3.set(1, m, y.get(1, m));
    }
    let scale3 = slice_max(&numerator_bound(&t3, sigma, &coef), 3);
    let mut worst: f64 = 0.0;
    for k in [3, 0, -1, -2, -3] {
        worst = worst.max(audit(xi3[(k + 3) as usize], scale3, || format!("level 3, xi_(3,{k})"))?);
    }

    for l in 4..=order + 2 {
        let n = l - 2;
        let width = 2 * n + 1;
        let mut trunc = Graded::zero(l);
        for nn in 1..=n {
            for m in -(nn as i32)..=nn as i32 {
                trunc.set(nn, m, y.get(nn, m));
            }
        }
        let b = level_slice(&numerator(&trunc, sigma, &coef), l);
        let mut cols = Vec::with_capacity(width);
        for j in 0..width {
            let m = j as i32 - n as i32;
            trunc.set(n, m, C64::new(1.0, 0.0));
            let s = level_slice(&numerator(&trunc, sigma, &coef), l);
            trunc.set(n, m, C64::new(0.0, 0.0));
            cols.push(s.iter().zip(&b).map(|(a, c)| a - c).collect::<Vec<_>>());
        }
        // The 2l+1 equations ξ_{l,k} are consistent and of rank 2l−3.  The
        // square top-down subsystem amplifies roundoff by roughly an order
        // of magnitude per level, so the unknowns are fixed by a QR least
        // squares fit of all rows and every row is then audited.
        let rows = 2 * l + 1;
        let a: Vec<Vec<C64>> = (0..rows)
            .map(|row| cols.iter().map(|c| c[row]).collect())
            .collect();
        let rhs: Vec<C64> = b.iter().map(|v| -v).collect();
        let sol = least_squares(a, rhs, 1e-13).ok_or_else(|| {
            Error::InternalInconsistency(format!(
                "level {l}: equations for c_({n},m) are rank deficient (resonant sigma = {sigma})"
            ))
        })?;
        for (j, v) in sol.iter().enumerate() {
            y.set(n, j as i32 - n as i32, *v);
            trunc.set(n, j as i32 - n as i32, *v);
        }
        let scale = slice_max(&numerator_bound(&trunc, sigma, &coef), l);
        for k in -(l as i32)..=l as i32 {
            let row = (k + l as i32) as usize;
            let mut res = b[row];
            for (col, v) in cols.iter().zip(&sol) {
                res += col[row] * v;
            }
            worst = worst.max(audit(res, scale, || format!("level {l}, xi_({l},{k})"))?);
        }
    }
    Ok((y, worst))
}

fn table(y: &Graded, n_range: std::ops::RangeInclusive<usize>, shift: usize) -> Vec<Coefficient> {
    let mut out = Vec::new();
    for n in n_range {
        let src = n + shift;
        for m in -(src as i32)..=src as i32 {
            out.push(Coefficient {
                n: n as i32,
                m,
                value: y.get(src, m),
            });
        }
    }
    out
}

fn expand_local(
    point: Point,
    theta: &ThetaParams,
    sigma: C64,
    r: C64,
    order: usize,
) -> Result<SeriesExpansion> {
    if order == 0 || order > ORDER_CAP {
        return Err(Error::InvalidOrder {
            order,
            cap: ORDER_CAP,
        });
    }
    let local = point.local_theta(theta);
    let regime = Regime::of_sigma(sigma);
    if regime == Regime::InverseOscillatory {
        // 1/ỹ = ỹ*/t with ỹ* the oscillatory expansion for the exponents
        // of the fractional linear image and σ* = 1 − σ: d_{nm} = c*_{n+1,m}.
        let star = local.fractional_linear()?;
        let (y, audit_residual) = recursion(&star, 1.0 - sigma, r, order + 1)?;
        return Ok(SeriesExpansion {
            point,
            regime,
            theta: *theta,
            sigma,
            r,
            order,
            coeffs: table(&y, 0..=order, 1),
            audit_residual,
        });
    }
    let (y, audit_residual) = recursion(&local, sigma, r, order)?;
    Ok(SeriesExpansion {
        point,
        regime,
        theta: *theta,
        sigma,
        r,
        order,
        coeffs: table(&y, 1..=order, 0),
        audit_residual,
    })
}

/// Expansion at `x = 0` with integration constants `(σ, r)`; `c_{11} = −r/σ`.
///
/// `Re σ = 1` produces the `d_{nm}` table of `1/y`; any other non-integer σ
/// (including `Re σ < 0`, used by the σ ↦ −σ reparametrisation) produces
/// `c_{nm}`.
pub fn expand(theta: &ThetaParams, sigma: C64, r: C64, order: usize) -> Result<SeriesExpansion> {
    expand_local(Point::Zero, theta, sigma, r, order)
}

/// Expansion at `point` in its local variable, with the constants given by
/// the connection formulae for these traces.
pub fn expansion_at_point(
    theta: &ThetaParams,
    traces: &MonodromyTraces,
    point: Point,
    order: usize,
) -> Result<SeriesExpansion> {
    let b = connect_at(theta, traces, point)?;
    expand_local(point, theta, b.sigma.sigma, b.r, order)
}

/// Expansion at `point` for explicitly given local constants.
pub fn expand_at(
    theta: &ThetaParams,
    point: Point,
    sigma: C64,
    r: C64,
    order: usize,
) -> Result<SeriesExpansion> {
    expand_local(point, theta, sigma, r, order)
}

/// Rewrites an oscillatory expansion at `x = 0` through `y ↦ x/y`:
/// `d_{nm} = c_{n+1,m}`, `σ ↦ 1 − σ`, exponents mapped by the fractional
/// linear transformation.  The result describes `x/y(x)`.
pub fn transform_expansion_inverse(e: &SeriesExpansion) -> Result<SeriesExpansion> {
    if e.regime != Regime::Oscillatory || e.point != Point::Zero {
        return Err(Error::WrongRegime {
            operation: "transform_expansion_inverse",
            expected: "Oscillatory at x=0",
            found: e.regime,
        });
    }
    let coeffs = e
        .coeffs
        .iter()
        .filter(|c| c.n >= 2)
        .map(|c| Coefficient {
            n: c.n - 1,
            ..*c
        })
        .chain(
            // The n = 0 row comes from c_{1m}.
            e.coeffs.iter().filter(|c| c.n == 1).map(|c| Coefficient { n: 0, ..*c }),
        )
        .collect::<Vec<_>>();
    let mut coeffs = coeffs;
    coeffs.sort_by_key(|c| (c.n, c.m));
    Ok(SeriesExpansion {
        point: Point::Zero,
        regime: Regime::InverseOscillatory,
        theta: e.theta.fractional_linear()?,
        sigma: 1.0 - e.sigma,
        r: e.r,
        order: e.order - 1,
        coeffs,
        audit_residual: e.audit_residual,
    })
}

/// Value and first two derivatives in the local variable.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: C64,
    d1: C64,
    d2: C64,
}

impl SeriesExpansion {
    /// `c_{nm}` (or `d_{nm}`); zero outside the table.
    pub fn coefficient(&self, n: i32, m: i32) -> C64 {
        self.coeffs
            .iter()
            .find(|c| c.n == n && c.m == m)
            .map(|c| c.value)
            .unwrap_or_default()
    }

    /// The exponent multiplying `m`: σ, or `1 − σ` for the `d` table.
    pub fn power(&self) -> C64 {
        if self.regime == Regime::InverseOscillatory {
            1.0 - self.sigma
        } else {
            self.sigma
        }
    }

    /// Normalised table `c̃_{nm} = c_{n+1,m−1}/a` of the form
    /// `y = a x^{1−σ}(1 + Σ c̃_{nm} xⁿ x^{mσ})`, with `a = c_{1,−1}`.
    pub fn normalized_coefficient(&self, n: i32, m: i32) -> C64 {
        self.coefficient(n + 1, m - 1) / self.coefficient(1, -1)
    }

    fn check_domain(&self, t: C64, cfg: &SeriesConfig) -> Result<()> {
        if t.norm() > cfg.radius {
            return Err(Error::OutsideValidityRadius {
                modulus: t.norm(),
                reason: format!("|t| > {}", cfg.radius),
            });
        }
        if t.norm() == 0.0 || (t.im == 0.0 && t.re < 0.0) {
            return Err(Error::OutsideValidityRadius {
                modulus: t.norm(),
                reason: "local variable on the branch cut".into(),
            });
        }
        if let Some(bound) = cfg.oscillatory_bound {
            if matches!(self.regime, Regime::Oscillatory | Regime::InverseOscillatory) {
                let n0 = if self.regime == Regime::InverseOscillatory { 0 } else { 1 };
                let lo = self.coefficient(n0, -1);
                let hi = self.coefficient(n0, 1);
                if lo.norm() > 1e-300 {
                    let q = (hi / lo * (self.power() * t.ln()).exp()).norm();
                    if q > bound {
                        return Err(Error::OutsideValidityRadius {
                            modulus: t.norm(),
                            reason: format!("oscillatory parameter |e^(-2i phi) t^sigma| = {q:.3e} > {bound}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn local_jet(&self, t: C64) -> Jet {
        let lt = t.ln();
        let p = self.power();
        let mut j = Jet {
            v: C64::new(0.0, 0.0),
            d1: C64::new(0.0, 0.0),
            d2: C64::new(0.0, 0.0),
        };
        for c in &self.coeffs {
            let e = c.n as f64 + c.m as f64 * p;
            let tp = (e * lt).exp();
            j.v += c.value * tp;
            j.d1 += c.value * e * tp / t;
            j.d2 += c.value * e * (e - 1.0) * tp / (t * t);
        }
        if self.regime == Regime::InverseOscillatory {
            let (d, d1, d2) = (j.v, j.d1, j.d2);
            j = Jet {
                v: 1.0 / d,
                d1: -d1 / (d * d),
                d2: (2.0 * d1 * d1 - d * d2) / (d * d * d),
            };
        }
        j
    }

    fn global_jet(&self, x: C64, cfg: &SeriesConfig) -> Result<Jet> {
        let t = self.point.local_variable(x);
        self.check_domain(t, cfg)?;
        if self.regime == Regime::InverseOscillatory {
            let lt = t.ln();
            let p = self.power();
            let d: C64 = self
                .coeffs
                .iter()
                .map(|c| c.value * ((c.n as f64 + c.m as f64 * p) * lt).exp())
                .sum();
            if d.norm() < 1e-10 {
                return Err(Error::NearPole(format!(
                    "denominator series {d} at x = {x}"
                )));
            }
        }
        let s = self.local_jet(t);
        Ok(match self.point {
            Point::Zero => s,
            Point::One => Jet {
                v: 1.0 - s.v,
                d1: s.d1,
                d2: -s.d2,
            },
            Point::Infinity => Jet {
                v: s.v / t,
                d1: s.v - t * s.d1,
                d2: t * t * t * s.d2,
            },
        })
    }

    /// `y(x)` from the partial sums, with the default domain checks.
    pub fn evaluate(&self, x: C64) -> Result<C64> {
        self.evaluate_with(x, &SeriesConfig::default())
    }

    pub fn evaluate_with(&self, x: C64, cfg: &SeriesConfig) -> Result<C64> {
        Ok(self.global_jet(x, cfg)?.v)
    }

    /// `(y, y′, y″)` at `x`.
    pub fn jet(&self, x: C64, cfg: &SeriesConfig) -> Result<(C64, C64, C64)> {
        let j = self.global_jet(x, cfg)?;
        Ok((j.v, j.d1, j.d2))
    }

    /// PVI written as `Eq = 0` evaluated on the truncated series.
    pub fn pvi_residual(&self, x: C64) -> Result<C64> {
        self.pvi_residual_with(x, &SeriesConfig::default())
    }

    pub fn pvi_residual_with(&self, x: C64, cfg: &SeriesConfig) -> Result<C64> {
        let j = self.global_jet(x, cfg)?;
        Ok(pvi_eq(&self.theta.coefficients(), x, j.v, j.d1, j.d2))
    }

    /// The same residual as numerator / denominator.
    pub fn pvi_residual_factored(&self, x: C64, cfg: &SeriesConfig) -> Result<C64> {
        let j = self.global_jet(x, cfg)?;
        let c = self.theta.coefficients();
        let (num, den) = pvi_numerator_denominator(&c, x, j.v, j.d1, j.d2);
        Ok(num / den)
    }
}

/// `Eq := −y″ + ½(1/y + 1/(y−1) + 1/(y−x)) y′² − (1/x + 1/(x−1) + 1/(y−x)) y′
///        + y(y−1)(y−x)/(x²(x−1)²) [α + βx/y² + γ(x−1)/(y−1)² + δx(x−1)/(y−x)²]`.
pub fn pvi_eq(c: &PviCoefficients, x: C64, y: C64, y1: C64, y2: C64) -> C64 {
    let ym1 = y - 1.0;
    let ymx = y - x;
    let xm1 = x - 1.0;
    -y2 + 0.5 * (1.0 / y + 1.0 / ym1 + 1.0 / ymx) * y1 * y1
        - (1.0 / x + 1.0 / xm1 + 1.0 / ymx) * y1
        + y * ym1 * ymx / (x * x * xm1 * xm1)
            * (c.alpha
                + c.beta * x / (y * y)
                + c.gamma * xm1 / (ym1 * ym1)
                + c.delta * x * xm1 / (ymx * ymx))
}

/// `(numerator, 2y(1−y)(y−x)x²(x−1)²)` with `Eq = numerator/denominator`.
pub fn pvi_numerator_denominator(
    c: &PviCoefficients,
    x: C64,
    y: C64,
    y1: C64,
    y2: C64,
) -> (C64, C64) {
    let xm1 = x - 1.0;
    let p = y * (y - 1.0) * (y - x);
    let q = (y - 1.0) * (y - x) + y * (y - x) + y * (y - 1.0);
    let d1 = x * y1;
    let d2 = x * x * y2;
    let num = 2.0 * p * xm1 * xm1 * d2 - xm1 * xm1 * d1 * d1 * q
        + 2.0 * d1 * (p * xm1 * (2.0 * x - 1.0) + x * xm1 * xm1 * y * (y - 1.0))
        - 2.0
            * (c.alpha * p * p
                + c.beta * x * (y - 1.0) * (y - 1.0) * (y - x) * (y - x)
                + c.gamma * xm1 * y * y * (y - x) * (y - x)
                + c.delta * x * xm1 * y * y * (y - 1.0) * (y - 1.0));
    let den = 2.0 * y * (1.0 - y) * (y - x) * x * x * xm1 * xm1;
    (num, den)
}

// ---------------------------------------------------------------------------
// Oscillatory bridge

/// Expansion `f(x) = Σ_{n≥0} f_n zⁿ`, `z = e^{−2iψ} x^{−iν}`, `ψ = φ/2 − π/4`,
/// solving `−2iA sin²(ν/2 ln x + ψ) + iA + B = sin²(ν/2 ln x + f(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeExpansion {
    pub psi: C64,
    pub nu: f64,
    pub coefficients: Vec<C64>,
    /// Estimated radius of convergence in `z`.
    pub radius: f64,
}

fn series_mul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (i, x) in a.iter().enumerate().take(n) {
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `√q` with `q_0 = 1`, principal branch at the origin.
fn series_sqrt(q: &[C64], n: usize) -> Vec<C64> {
    let mut s = vec![C64::new(0.0, 0.0); n];
    s[0] = C64::new(1.0, 0.0);
    for k in 1..n {
        let mut acc = q.get(k).copied().unwrap_or_default();
        for i in 1..k {
            acc -= s[i] * s[k - i];
        }
        s[k] = acc / 2.0;
    }
    s
}

/// `ln g` with `g_0 = 1`, via `(ln g)′ = g′/g`.
fn series_log(g: &[C64], n: usize) -> Vec<C64> {
    let mut l = vec![C64::new(0.0, 0.0); n];
    for k in 1..n {
        // k l_k = k g_k − Σ_{j=1}^{k−1} j l_j g_{k−j}
        let mut acc = k as f64 * g.get(k).copied().unwrap_or_default();
        for j in 1..k {
            acc -= j as f64 * l[j] * g[k - j];
        }
        l[k] = acc / k as f64;
    }
    l
}

/// Coefficients `f_0 … f_{terms−1}` of the bridge function.
///
/// With `κ = (2B−1)/(iA)`, `e^{2if} = −2iA e^{2iψ} · ½[1 + κz + z² + √Q(z)]`,
/// `Q = (1 + κz + z²)² + z²/A²`, and `f = ψ + (1/2i) ln(−2iA) + (1/2i) ln(½[…])`.
pub fn bridge_oscillatory(a: C64, b: C64, phi: C64, nu: f64, terms: usize) -> Result<BridgeExpansion> {
    if a.norm() < 1e-14 {
        return Err(Error::ExpansionDomainViolated("A = 0".into()));
    }
    if terms == 0 {
        return Err(Error::ExpansionDomainViolated("no terms requested".into()));
    }
    let n = terms;
    let psi = 0.5 * phi - PI / 4.0;
    let kappa = (2.0 * b - 1.0) / (I * a);
    let one = C64::new(1.0, 0.0);
    let lin = vec![one, kappa, one];
    let mut q = series_mul(&lin, &lin, n.max(5));
    q[2] += 1.0 / (a * a);
    let s = series_sqrt(&q, n);
    let mut g = s.clone();
    for (k, v) in lin.iter().enumerate() {
        if k < n {
            g[k] += v;
        }
    }
    for v in g.iter_mut() {
        *v *= 0.5;
    }
    let lg = series_log(&g, n);
    let mut coefficients: Vec<C64> = lg.iter().map(|v| v / (2.0 * I)).collect();
    coefficients[0] = psi + (-2.0 * I * a).ln() / (2.0 * I);
    // Radius: the sqrt branch points (zeros of Q) and the zeros of g both
    // bound it; estimate from the tail of the coefficients.
    let mut radius = f64::INFINITY;
    for (k, c) in coefficients.iter().enumerate().skip((n / 2).max(1)) {
        let m = c.norm();
        if m > 0.0 {
            radius = radius.min(m.powf(-1.0 / k as f64));
        }
    }
    Ok(BridgeExpansion {
        psi,
        nu,
        coefficients,
        radius,
    })
}

impl BridgeExpansion {
    /// The small variable `z = e^{−2iψ} x^{−iν}`.
    pub fn z(&self, x: C64) -> C64 {
        (-2.0 * I * self.psi).exp() * (-I * self.nu * x.ln()).exp()
    }

    /// `f_1(x)`; errors outside half the estimated radius of convergence.
    pub fn evaluate(&self, x: C64) -> Result<C64> {
        let z = self.z(x);
        if z.norm() > 0.5 * self.radius {
            return Err(Error::ExpansionDomainViolated(format!(
                "|z| = {:.3e} exceeds half the convergence radius {:.3e}",
                z.norm(),
                self.radius
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coefficients.iter().rev() {
            acc = acc * z + c;
        }
        Ok(acc)
    }

    /// The second solution `f_2 = −f_1 − ν ln x`.
    pub fn evaluate_second(&self, x: C64) -> Result<C64> {
        Ok(-self.evaluate(x)? - self.nu * x.ln())
    }
}
