mod common;

use common::{c, rel};
use painleve::fixtures::random_generic_dataset;
use painleve::monodromy::ThetaParams;
use painleve::oracle::*;
use painleve::series::{expand, pvi_numerator_denominator, SeriesConfig};
use painleve::special::HalfPeriods;
use painleve::{Complex64 as C, Error};
use rand::Rng;

fn theta() -> ThetaParams {
    ThetaParams::real(0.31, 0.17, 0.42, 0.73).unwrap()
}

fn path(points: Vec<C>, tolerance: f64) -> OdePath {
    OdePath {
        waypoints: points,
        max_step: 0.02,
        tolerance,
    }
}

/// `y″` from the polynomial transcription: the numerator is affine in `y″`.
fn rhs_from_numerator(th: &ThetaParams, s: &OdeState) -> C {
    let co = th.coefficients();
    let (num0, _) = pvi_numerator_denominator(&co, s.x, s.y, s.yprime, c(0.0, 0.0));
    let (num1, _) = pvi_numerator_denominator(&co, s.x, s.y, s.yprime, c(1.0, 0.0));
    -num0 / (num1 - num0)
}

#[test]
fn rational_and_polynomial_transcriptions_agree() {
    let mut g = common::rng(3);
    for _ in 0..200 {
        let th = common::random_complex_theta(&mut g);
        let s = OdeState {
            x: c(g.gen_range(-2.0..2.0), g.gen_range(-2.0..2.0)),
            y: c(g.gen_range(-2.0..2.0), g.gen_range(-2.0..2.0)),
            yprime: c(g.gen_range(-2.0..2.0), g.gen_range(-2.0..2.0)),
        };
        let Ok(direct) = pvi_rhs(&th.coefficients(), &s) else { continue };
        let poly = rhs_from_numerator(&th, &s);
        assert!(rel(poly, direct) < 1e-9, "{s:?}: {direct} vs {poly}");
    }
}

#[test]
fn singular_loci_are_reported() {
    let co = theta().coefficients();
    let at = |x: C, y: C| pvi_rhs(&co, &OdeState { x, y, yprime: c(0.1, 0.0) });
    assert!(matches!(at(c(0.5, 0.0), c(0.5, 0.0)), Err(Error::SingularLocus("y-x"))));
    assert!(matches!(at(c(0.0, 0.0), c(0.5, 0.0)), Err(Error::SingularLocus("x"))));
    assert!(matches!(at(c(1.0, 0.0), c(0.5, 0.0)), Err(Error::SingularLocus("x-1"))));
    assert!(matches!(at(c(0.5, 0.0), c(0.0, 0.0)), Err(Error::SingularLocus("y"))));
    assert!(matches!(at(c(0.5, 0.0), c(1.0, 0.0)), Err(Error::SingularLocus("y-1"))));
    // Next to y = x both transcriptions stay finite and agree.
    for d in [c(1e-3, 0.0), c(0.0, 1e-3), c(-2e-3, 1e-3)] {
        let s = OdeState { x: c(0.5, 0.0), y: c(0.5, 0.0) + d, yprime: c(0.3, 0.2) };
        let direct = pvi_rhs(&co, &s).unwrap();
        assert!(rel(rhs_from_numerator(&theta(), &s), direct) < 1e-8);
    }
}

#[test]
fn integration_is_reversible() {
    let co = theta().coefficients();
    let init = OdeState { x: c(0.2, 0.05), y: c(0.4, 0.3), yprime: c(0.2, -0.5) };
    let fwd = integrate(&co, &init, &path(vec![init.x, c(0.5, 0.1), c(0.6, -0.1)], 1e-12)).unwrap();
    let end = *fwd.last().unwrap();
    let back = integrate(&co, &end, &path(vec![end.x, c(0.5, 0.1), init.x], 1e-12)).unwrap();
    let home = back.last().unwrap();
    assert!(rel(home.y, init.y) < 1e-9 && rel(home.yprime, init.yprime) < 1e-9, "{home:?}");
}

#[test]
fn fixed_step_integrator_is_fifth_order() {
    let co = theta().coefficients();
    let init = OdeState { x: c(0.2, 0.0), y: c(0.45, 0.1), yprime: c(0.3, 0.2) };
    let end = c(0.4, 0.1);
    let reference = integrate_fixed(&co, &init, end, 1280).unwrap();
    let errs: Vec<f64> = [10, 20, 40]
        .iter()
        .map(|&n| (integrate_fixed(&co, &init, end, n).unwrap().y - reference.y).norm())
        .collect();
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 16.0, "errors {errs:?}");
    }
}

#[test]
fn waypoints_are_validated() {
    let co = theta().coefficients();
    let init = OdeState { x: c(0.2, 0.0), y: c(0.45, 0.1), yprime: c(0.3, 0.2) };
    assert!(integrate(&co, &init, &path(vec![c(0.3, 0.0), c(0.4, 0.0)], 1e-10)).is_err());
    assert!(integrate(&co, &init, &path(vec![init.x], 1e-10)).is_err());
    assert!(integrate(&co, &init, &path(vec![init.x, c(1.0, 0.0)], 1e-10)).is_err());
}

/// Seeds at 10⁻³ from the series and integrates to 5·10⁻³; returns the
/// relative mismatch with the series there.
fn series_vs_ode(th: &ThetaParams, sigma: C, r: C) -> f64 {
    let e = expand(th, sigma, r, 10).unwrap();
    let cfg = SeriesConfig::unchecked();
    let x0 = c(1e-3, 0.0);
    let (y, y1, _) = e.jet(x0, &cfg).unwrap();
    let init = OdeState { x: x0, y, yprime: y1 };
    let x1 = c(5e-3, 0.0);
    let traj = integrate(&th.coefficients(), &init, &path(vec![x0, x1], 1e-13)).unwrap();
    let end = traj.last().unwrap();
    rel(end.y, e.evaluate_with(x1, &cfg).unwrap())
}

#[test]
fn series_and_ode_agree_in_every_regime() {
    let th = theta();
    for (sigma, r) in [(c(0.3, 0.1), c(0.6, -0.2)), (c(0.0, 0.4), c(0.5, 0.3)), (c(1.0, 0.4), c(0.5, 0.3))] {
        let err = series_vs_ode(&th, sigma, r);
        assert!(err < 1e-6, "sigma {sigma}: {err:e}");
    }
}

fn picard_track(spec: &PicardSpec) -> f64 {
    let th = PicardSpec::theta();
    let x0 = c(0.3, 0.0);
    let (y, y1, _) = picard_jet(spec, x0, 2e-3).unwrap();
    let points: Vec<C> = (0..=30).map(|k| c(0.3 + 0.01 * k as f64, 0.0)).collect();
    let traj = integrate_with_detours(&th.coefficients(), &OdeState { x: x0, y, yprime: y1 }, &path(points, 1e-12), &DetourConfig::default()).unwrap();
    traj.at_waypoints
        .iter()
        .map(|s| rel(s.y, picard_solution(spec, s.x).unwrap()))
        .fold(0.0, f64::max)
}

#[test]
fn picard_closed_form_matches_integration() {
    let spec = PicardSpec { nu1: c(0.7, 0.0), nu2: c(0.4, 0.0), n: 0 };
    let err = picard_track(&spec);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn picard_integration_passes_a_pole() {
    // ν1 ω1 + ν2 ω2 vanishes at x = 0.455 when ν1 = −τ(0.455) ν2.
    let tau = HalfPeriods::from_x(c(0.455, 0.0)).unwrap().tau;
    let spec = PicardSpec { nu1: -tau * 0.3, nu2: c(0.3, 0.0), n: 0 };
    assert!(picard_solution(&spec, c(0.455, 0.0)).map_or(true, |y| y.norm() > 1e8));
    let err = picard_track(&spec);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn picard_solution_solves_pvi() {
    let th = PicardSpec::theta();
    let spec = PicardSpec { nu1: c(0.7, 0.1), nu2: c(0.4, -0.2), n: 0 };
    for x in [c(0.3, 0.0), c(0.5, 0.2), c(0.2, -0.1)] {
        let (y, y1, y2) = picard_jet(&spec, x, 2e-3).unwrap();
        let rhs = pvi_rhs(&th.coefficients(), &OdeState { x, y, yprime: y1 }).unwrap();
        assert!(rel(y2, rhs) < 1e-6, "x = {x}: {y2} vs {rhs}");
    }
}

#[test]
fn picard_leading_behaviour_in_the_power_sector() {
    let spec = PicardSpec { nu1: c(0.7, 0.0), nu2: c(0.4, 0.0), n: 0 };
    let lead = picard_leading(&spec, 0.4);
    let PicardLeading::Power { coefficient, exponent } = lead else { panic!("{lead:?}") };
    assert!((exponent - 0.4).norm() < 1e-15);
    let want = -0.25 * c(0.0, std::f64::consts::PI * 0.7).exp() * 16f64.powf(1.0 - 0.4);
    assert!(rel(coefficient, want) < 1e-14);
    // The ratio converges to 1 like a power of x.
    let dev = |x: f64| (picard_solution(&spec, c(x, 0.0)).unwrap() / lead.evaluate(c(x, 0.0)).unwrap() - 1.0).norm();
    let (d2, d4, d8) = (dev(1e-2), dev(1e-4), dev(1e-8));
    assert!(d8 < d4 && d4 < d2, "{d2} {d4} {d8}");
    assert!(d8 < 1e-2);
}

#[test]
fn picard_oscillatory_sectors() {
    // 𝒱 = 1: y ≈ x sin²(…) with ν2 = 1.
    let spec = PicardSpec { nu1: c(0.7, 0.0), nu2: c(1.0, 0.0), n: 0 };
    let lead = picard_leading(&spec, 1.0);
    for x in [1e-6, 1e-8] {
        let x = c(x, 0.0);
        assert!(rel(lead.evaluate(x).unwrap(), picard_solution(&spec, x).unwrap()) < 1e-3);
    }
    // 𝒱 = 0: the corrected inverse sine squared is exact up to O(x).
    let spec = PicardSpec { nu1: c(0.7, 0.0), nu2: c(0.0, 0.3), n: 0 };
    let lead = picard_leading(&spec, 0.0);
    for x in [1e-4, 1e-6] {
        let x = c(x, 0.0);
        assert!(rel(lead.evaluate(x).unwrap(), picard_solution(&spec, x).unwrap()) < 1e-3);
    }
}

#[test]
fn self_test_recovers_constants_at_zero() {
    for seed in 0..3 {
        let d = random_generic_dataset(seed).unwrap();
        let st = self_test_at_zero(&d.theta, &d.traces, &VerifyConfig::default()).unwrap();
        assert!(st.sigma_relative_error < 1e-6 && st.r_relative_error < 1e-6, "seed {seed}: {st:?}");
    }
}

#[test]
fn verify_either_agrees_or_says_why_not() {
    for seed in 0..4 {
        let d = random_generic_dataset(seed).unwrap();
        match verify_connection(&d.theta, &d.traces, &VerifyConfig::default()) {
            Ok(rep) => {
                assert!(rep.sigma1_relative_error < 1e-2, "seed {seed}: {:e}", rep.sigma1_relative_error);
                assert!(rep.fitted.order_spread < 1e-4);
            }
            Err(Error::PathBlocked(_) | Error::FitIllConditioned(_)) => {}
            Err(e) => panic!("seed {seed}: unexpected {e}"),
        }
    }
}
