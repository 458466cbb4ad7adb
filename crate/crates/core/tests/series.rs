mod common;

use std::f64::consts::PI;

use common::{c, rel};
use painleve::connection::{amplitude_a, connect_at, traces_from_r, Point};
use painleve::monodromy::{Regime, ThetaParams};
use painleve::series::*;
use painleve::{Complex64 as C, Error};
use proptest::prelude::*;
use rand::Rng;

const I: C = C::new(0.0, 1.0);

fn theta() -> ThetaParams {
    ThetaParams::real(0.31, 0.17, 0.42, 0.73).unwrap()
}

fn residual(e: &SeriesExpansion, x: f64) -> f64 {
    e.pvi_residual_with(c(x, 0.0), &SeriesConfig::unchecked()).unwrap().norm()
}

#[test]
fn first_level_closed_forms() {
    let th = theta();
    let co = th.coefficients();
    for (sigma, r) in [(c(0.4, 0.1), c(0.8, -0.3)), (c(0.0, 0.6), c(0.3, 0.2)), (c(0.7, -0.2), c(2.0, 0.5))] {
        let e = expand(&th, sigma, r, 8).unwrap();
        assert!(rel(e.coefficient(1, 1), -r / sigma) < 1e-14);
        let b = (sigma * sigma - 2.0 * co.beta - 1.0 + 2.0 * co.delta) / (2.0 * sigma * sigma);
        assert!(rel(e.coefficient(1, 0), b) < 1e-12);
        assert!(rel(e.coefficient(1, -1), amplitude_a(&th, sigma, r)) < 1e-12);
        assert!(e.audit_residual < AUDIT_TOL);
    }
}

#[test]
fn order_one_is_the_three_term_truncation() {
    let (sigma, r) = (c(0.35, 0.2), c(0.5, 0.4));
    let e = expand(&theta(), sigma, r, 1).unwrap();
    let x = c(0.01, 0.003);
    let l = x.ln();
    let want = e.coefficient(1, -1) * ((1.0 - sigma) * l).exp() + e.coefficient(1, 0) * x + e.coefficient(1, 1) * ((1.0 + sigma) * l).exp();
    assert!(rel(e.evaluate(x).unwrap(), want) < 1e-14);
}

#[test]
fn leading_power_dominates_near_zero() {
    // The relative correction is dominated by (c_10/a) x^σ.
    let (sigma, r) = (c(0.3, 0.1), c(0.6, -0.2));
    let th = theta();
    let e = expand(&th, sigma, r, 8).unwrap();
    let a = amplitude_a(&th, sigma, r);
    let dev = |x: f64| {
        let x = c(x, 0.0);
        (e.evaluate(x).unwrap() / (a * ((1.0 - sigma) * x.ln()).exp()) - 1.0).norm()
    };
    let devs: Vec<f64> = [1e-3, 1e-4, 1e-6, 1e-10].iter().map(|&x| dev(x)).collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    assert!(devs[3] < 0.05, "{devs:?}");
    let drop = devs[0] / devs[1];
    assert!((drop / 10f64.powf(sigma.re) - 1.0).abs() < 0.2, "drop {drop}");
}

#[test]
fn degenerate_sigma_kills_negative_m() {
    let th = ThetaParams::real(0.27, 0.36, 0.4, 0.55).unwrap();
    let deg = th.theta0 + th.thetax;
    let r = c(0.7, -0.4);
    let e = expand(&th, deg, r, 8).unwrap();
    let scale = e.coeffs.iter().map(|k| k.value.norm()).fold(0.0, f64::max);
    for k in e.coeffs.iter().filter(|k| k.m < 0) {
        assert!(k.value.norm() < 1e-10 * scale, "c_({},{}) = {}", k.n, k.m, k.value);
    }
    assert!((e.coefficient(1, 0) - th.theta0 / deg).norm() < 1e-10);
    assert!((e.coefficient(1, 1) + r / deg).norm() < 1e-10);
}

#[test]
fn residual_drops_by_the_order_increment() {
    let (sigma, r) = (c(0.2, 0.3), c(0.9, 0.4));
    let th = theta();
    let lo = expand(&th, sigma, r, 4).unwrap();
    let hi = expand(&th, sigma, r, 6).unwrap();
    let ratio = |x: f64| residual(&hi, x) / residual(&lo, x);
    let slope = (ratio(3e-2) / ratio(3e-3)).log10();
    let want = 2.0 - 2.0 * sigma.re;
    assert!((slope - want).abs() < 0.5, "slope {slope}, expected {want}");
}

#[test]
fn residual_paths_agree() {
    let th = theta();
    let cfg = SeriesConfig::unchecked();
    for (sigma, r) in [(c(0.4, 0.1), c(0.8, -0.3)), (c(0.0, 0.6), c(0.3, 0.2)), (c(1.0, 0.4), c(0.5, 0.5))] {
        // Low order keeps the residual well above rounding.
        let e = expand(&th, sigma, r, 2).unwrap();
        for x in [c(3e-2, 0.0), c(2e-2, 1e-2)] {
            let direct = e.pvi_residual_with(x, &cfg).unwrap();
            let factored = e.pvi_residual_factored(x, &cfg).unwrap();
            assert!(direct.norm() > 1e-6);
            // Both forms cancel terms of size |y|/|x|² down to the residual.
            let (y, y1, y2) = e.jet(x, &cfg).unwrap();
            let terms = y2.norm() + y1.norm() / x.norm() + y.norm() / x.norm_sqr();
            assert!((factored - direct).norm() < 1e-13 * terms, "{direct} vs {factored}");
        }
    }
}

#[test]
fn referee_reparametrisation_gives_the_same_solution() {
    let th = theta();
    let (sigma, r) = (c(0.3, 0.15), c(0.7, 0.2));
    let e = expand(&th, sigma, r, 10).unwrap();
    // r̃ = σ²A²/(4r) with A² read off c_{1,−1} = σA²/(4r).
    let r_tilde = sigma * e.coefficient(1, -1);
    let f = expand(&th, -sigma, r_tilde, 10).unwrap();
    assert!(rel(f.coefficient(1, 1), e.coefficient(1, -1)) < 1e-12);
    for x in [c(1e-3, 0.0), c(2e-3, 1e-3)] {
        let cfg = SeriesConfig::unchecked();
        assert!(rel(f.evaluate_with(x, &cfg).unwrap(), e.evaluate_with(x, &cfg).unwrap()) < 1e-10);
    }
}

#[test]
fn fractional_linear_transform_of_an_oscillatory_expansion() {
    let th = theta();
    let e = expand(&th, c(0.0, 0.5), c(0.4, 0.3), 10).unwrap();
    let inv = transform_expansion_inverse(&e).unwrap();
    assert_eq!(inv.regime, Regime::InverseOscillatory);
    assert_eq!(e.regime, Regime::Oscillatory);
    for m in -1..=1 {
        assert_eq!(inv.coefficient(0, m), e.coefficient(1, m));
    }
    assert!((inv.sigma - c(1.0, -0.5)).norm() < 1e-15);
    let cfg = SeriesConfig::unchecked();
    for x in [c(1e-3, 0.0), c(5e-4, 2e-4)] {
        let product = inv.evaluate_with(x, &cfg).unwrap() * e.evaluate_with(x, &cfg).unwrap() / x;
        assert!((product - 1.0).norm() < 1e-8, "product {product}");
    }
    assert!(matches!(transform_expansion_inverse(&inv), Err(Error::WrongRegime { .. })));
}

#[test]
fn inverse_regime_expansion_has_small_residual() {
    let th = theta();
    let e = expand(&th, c(1.0, 0.45), c(0.6, -0.2), 8).unwrap();
    assert_eq!(e.regime, Regime::InverseOscillatory);
    // Measured against the natural size |y|/x² of the terms in the equation.
    for x in [3e-2, 1e-2, 1e-3] {
        let y = e.evaluate_with(c(x, 0.0), &SeriesConfig::unchecked()).unwrap();
        assert!(residual(&e, x) < 1e-12 * y.norm() / (x * x), "x = {x}");
    }
}

#[test]
fn expansions_at_one_and_infinity_use_the_relabelled_exponents() {
    let th = ThetaParams::real(0.23, 0.41, 0.67, 0.5).unwrap();
    let t = traces_from_r(&th, c(0.35, 0.1), c(0.8, 0.3)).unwrap();
    for (point, local) in [(Point::One, th.relabel_at_one()), (Point::Infinity, th.relabel_at_infinity())] {
        let b = connect_at(&th, &t, point).unwrap();
        let e = expansion_at_point(&th, &t, point, 8).unwrap();
        let reference = expand(&local, b.sigma.sigma, b.r, 8).unwrap();
        assert_eq!(e.coeffs, reference.coeffs);
        assert_eq!(e.point, point);
    }
}

#[test]
fn residual_decays_towards_one_and_infinity() {
    let th = ThetaParams::real(0.23, 0.41, 0.67, 0.5).unwrap();
    let (sigma, r) = (c(0.25, 0.1), c(0.6, 0.3));
    let cfg = SeriesConfig::unchecked();
    for point in [Point::One, Point::Infinity] {
        let e = expand_at(&th, point, sigma, r, 6).unwrap();
        let at = |d: f64| match point {
            Point::One => c(1.0 - d, 0.0),
            _ => c(1.0 / d, 0.0),
        };
        let far = e.pvi_residual_with(at(3e-2), &cfg).unwrap().norm();
        let near = e.pvi_residual_with(at(3e-3), &cfg).unwrap().norm();
        // Expected decade slope about N − 1 − (N + 1) Re σ ≈ 3.25 in the local variable.
        assert!(near < 1e-2 * far, "{point:?}: {far:e} -> {near:e}");
        if point == Point::One {
            // y = 1 − ỹ(1 − x) with ỹ ~ a t^{1−σ}.
            let gap = |d: f64| (e.evaluate_with(at(d), &cfg).unwrap() - 1.0).norm();
            let drop = gap(1e-6) / gap(1e-8);
            assert!((drop.log10() - 2.0 * (1.0 - sigma.re)).abs() < 0.1, "drop {drop}");
        }
    }
}

#[test]
fn domain_checks() {
    let e = expand(&theta(), c(0.3, 0.1), c(0.5, 0.1), 8).unwrap();
    assert!(matches!(e.evaluate(c(0.2, 0.0)), Err(Error::OutsideValidityRadius { .. })));
    assert!(matches!(expand(&theta(), c(1.0, 0.0), c(0.5, 0.1), 8), Err(Error::NearIntegerSigma(_))));
    assert!(matches!(expand(&theta(), c(0.3, 0.0), c(0.0, 0.0), 8), Err(Error::ZeroR)));
    assert!(matches!(expand(&theta(), c(0.3, 0.0), c(0.5, 0.0), 13), Err(Error::InvalidOrder { .. })));
}

#[test]
fn json_round_trip_is_exact() {
    let e = expand(&theta(), c(0.3, 0.1), c(0.5, 0.1), 6).unwrap();
    let text = serde_json::to_string(&e).unwrap();
    let back: SeriesExpansion = serde_json::from_str(&text).unwrap();
    assert_eq!(back, e);
}

/// `−2iA sin²(νL/2 + ψ) + iA + B` and `sin²(νL/2 + f)` at `x`.
fn bridge_sides(a: C, b: C, psi: C, nu: f64, f: C, x: C) -> (C, C) {
    let h = 0.5 * nu * x.ln();
    let s = (h + psi).sin();
    let t = (h + f).sin();
    (-2.0 * I * a * s * s + I * a + b, t * t)
}

#[test]
fn bridge_identity_on_random_inputs() {
    let mut g = common::rng(31);
    for _ in 0..10 {
        let a = C::from_polar(g.gen_range(0.4..1.5), g.gen_range(-PI..PI));
        let b = c(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0));
        let nu = g.gen_range(0.2..1.5);
        let probe = bridge_oscillatory(a, b, c(0.0, 0.0), nu, 30).unwrap();
        // Place |z| = |e^{−2iψ}| at a quarter of the convergence radius.
        let im_psi = 0.5 * (0.25 * probe.radius.min(1.0)).ln();
        let psi = c(g.gen_range(-PI..PI), im_psi);
        let phi = 2.0 * psi + PI / 2.0;
        let br = bridge_oscillatory(a, b, phi, nu, 30).unwrap();
        assert!((br.psi - psi).norm() < 1e-14);
        for k in 0..20 {
            let x = c(10f64.powf(-1.0 - 0.3 * k as f64), 0.0);
            let f = br.evaluate(x).unwrap();
            let (lhs, rhs) = bridge_sides(a, b, psi, nu, f, x);
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
            let f2 = br.evaluate_second(x).unwrap();
            let (_, rhs2) = bridge_sides(a, b, psi, nu, f2, x);
            assert!((rhs2 - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
        }
    }
}

#[test]
fn bridge_rejects_degenerate_input() {
    assert!(matches!(bridge_oscillatory(c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), 0.5, 10), Err(Error::ExpansionDomainViolated(_))));
    let br = bridge_oscillatory(c(0.7, 0.2), c(0.1, 0.0), c(0.0, 10.0), 0.5, 20).unwrap();
    assert!(matches!(br.evaluate(c(0.01, 0.0)), Err(Error::ExpansionDomainViolated(_))));
}

fn generic_input() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64, f64, f64)> {
    // |Im σ| ≥ 0.05 keeps clear of the resonances kσ ∈ ℤ.
    let im = prop_oneof![-0.4..-0.05f64, 0.05..0.4f64];
    (0.1..0.9f64, 0.1..0.9f64, 0.1..0.9f64, 0.1..0.9f64, 0.1..0.9f64, im, 0.2..2.0f64, -PI..PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn r_grading((t0, tx, t1, ti, sr, si, rm, ra) in generic_input()) {
        let th = ThetaParams::real(t0, tx, t1, ti).unwrap();
        let sigma = c(sr, si);
        let r = C::from_polar(rm, ra);
        let (Ok(e1), Ok(e2)) = (expand(&th, sigma, r, 8), expand(&th, sigma, 2.0 * r, 8)) else {
            return Err(TestCaseError::reject("resonant input"));
        };
        for k in &e1.coeffs {
            let row = e1.coeffs.iter().filter(|q| q.n == k.n).map(|q| q.value.norm()).fold(0.0, f64::max);
            let scaled = e2.coefficient(k.n, k.m) / 2f64.powi(k.m);
            prop_assert!((scaled - k.value).norm() <= 1e-12 * row, "c_({},{})", k.n, k.m);
        }
    }

    #[test]
    fn every_expansion_passes_its_audit((t0, tx, t1, ti, sr, si, rm, ra) in generic_input()) {
        let th = ThetaParams::real(t0, tx, t1, ti).unwrap();
        match expand(&th, c(sr, si), C::from_polar(rm, ra), 8) {
            Ok(e) => prop_assert!(e.audit_residual < AUDIT_TOL),
            Err(Error::InternalInconsistency(msg)) => prop_assert!(msg.contains("rank deficient"), "{}", msg),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
