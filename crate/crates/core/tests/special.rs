//! Special functions against independent oracles: a Stirling series for Γ,
//! the arithmetic–geometric mean for F, and a direct lattice sum for ℘.

use std::f64::consts::{LN_2, PI};

use painleve::special::{complex_gamma, digamma, hyper_f, hyper_f1, weierstrass_p_fourier, HalfPeriods};
use painleve::{Complex64 as C, Error};
use proptest::prelude::*;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

/// ln Γ(z) by shifting to Re z ≥ 30 and summing the Stirling series.
fn ln_gamma_stirling(z: C) -> C {
    const SHIFT: usize = 30;
    // B_{2k} / (2k(2k−1))
    const COEFFS: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
    ];
    let mut shift = C::new(0.0, 0.0);
    for k in 0..SHIFT {
        shift += (z + k as f64).ln();
    }
    let w = z + SHIFT as f64;
    let mut s = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln();
    let w2 = w * w;
    let mut p = w;
    for c in COEFFS {
        s += c / p;
        p *= w2;
    }
    s - shift
}

/// Complete elliptic integral through the AGM: F(1/2,1/2,1;x) = 1/AGM(1, √(1−x)).
fn f_by_agm(x: C) -> C {
    let mut a = C::new(1.0, 0.0);
    let mut b = (1.0 - x).sqrt();
    for _ in 0..60 {
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        a = an;
        b = bn;
        if (a - b).norm() < 1e-17 {
            break;
        }
    }
    1.0 / a
}

/// ℘ by summing the lattice directly over |m|, |n| ≤ R.
fn p_box(u: C, w1: C, w2: C, r: i32) -> C {
    let mut s = 1.0 / (u * u);
    for m in -r..=r {
        for n in -r..=r {
            if m == 0 && n == 0 {
                continue;
            }
            let w = 2.0 * m as f64 * w1 + 2.0 * n as f64 * w2;
            let d = u - w;
            s += 1.0 / (d * d) - 1.0 / (w * w);
        }
    }
    s
}

/// The box-sum tail behaves like c2/R² + c3/R³ + c4/R⁴ + …; three
/// Richardson stages over R = 10, 20, 40, 80 remove those terms.
fn p_lattice(u: C, w1: C, w2: C) -> C {
    let mut t: Vec<C> = [10, 20, 40, 80].iter().map(|&r| p_box(u, w1, w2, r)).collect();
    for p in [2, 3, 4] {
        let k = 2f64.powi(p);
        t = t.windows(2).map(|w| (k * w[1] - w[0]) / (k - 1.0)).collect();
    }
    t[0]
}

#[test]
fn gamma_reference_values() {
    assert!(rel(complex_gamma(C::new(1.0, 0.0)).unwrap(), C::new(1.0, 0.0)) < 1e-14);
    assert!(rel(complex_gamma(C::new(0.5, 0.0)).unwrap(), C::new(PI.sqrt(), 0.0)) < 1e-14);
}

#[test]
fn gamma_matches_stirling_oracle() {
    for z in [C::new(0.5, 1.0), C::new(3.7, -2.2), C::new(-1.3, 0.4), C::new(7.0, 9.0), C::new(0.1, -0.05)] {
        let got = complex_gamma(z).unwrap();
        let want = ln_gamma_stirling(z).exp();
        assert!(rel(got, want) < 1e-12, "Γ({z}) = {got}, oracle {want}");
    }
}

#[test]
fn gamma_and_digamma_poles_are_errors() {
    for n in [0.0, -1.0, -4.0] {
        let z = C::new(n, 0.0);
        assert!(matches!(complex_gamma(z), Err(Error::PoleAtNonPositiveInteger(_))));
        assert!(matches!(digamma(z), Err(Error::PoleAtNonPositiveInteger(_))));
    }
}

#[test]
fn digamma_reference_values() {
    let one = digamma(C::new(1.0, 0.0)).unwrap();
    assert!((one - C::new(-EULER_GAMMA, 0.0)).norm() < 1e-13);
    let half = digamma(C::new(0.5, 0.0)).unwrap();
    assert!((half - C::new(-EULER_GAMMA - 2.0 * LN_2, 0.0)).norm() < 1e-13);
    let diff = digamma(C::new(3.5, 0.0)).unwrap() - half;
    // Telescoping: 1/0.5 + 1/1.5 + 1/2.5 = 46/15.
    assert!((diff - C::new(46.0 / 15.0, 0.0)).norm() < 1e-12);
}

#[test]
fn digamma_matches_derivative_of_ln_gamma() {
    let h = 1e-4;
    for z in [C::new(0.7, 0.3), C::new(2.5, -1.0), C::new(-0.4, 1.2)] {
        let fd = (ln_gamma_stirling(z + h) - ln_gamma_stirling(z - h)) / (2.0 * h);
        assert!((digamma(z).unwrap() - fd).norm() < 1e-8);
    }
}

#[test]
fn hypergeometric_f_examples() {
    assert_eq!(hyper_f(C::new(0.0, 0.0)).unwrap(), C::new(1.0, 0.0));
    let h = 1e-5;
    let d = (hyper_f(C::new(h, 0.0)).unwrap() - hyper_f(C::new(-h, 0.0)).unwrap()) / (2.0 * h);
    assert!((d - C::new(0.25, 0.0)).norm() < 1e-9);
    for x in [C::new(0.5, 0.0), C::new(-0.3, 0.6), C::new(0.9, 0.0), C::new(0.01, -0.02)] {
        assert!(rel(hyper_f(x).unwrap(), f_by_agm(x)) < 1e-13, "x = {x}");
    }
    assert!(matches!(hyper_f(C::new(1.0, 0.0)), Err(Error::OutsideDisk(_))));
    assert!(matches!(hyper_f1(C::new(0.0, -1.2)), Err(Error::OutsideDisk(_))));
}

#[test]
fn hypergeometric_f1_examples() {
    assert!((hyper_f1(C::new(0.0, 0.0)).unwrap() - C::new(-4.0 * LN_2, 0.0)).norm() < 1e-15);

    // τ assembled from F, F1 against its split form with arg x and ln|x|/16.
    let x = C::new(0.1, 0.0);
    let hp = HalfPeriods::from_x(x).unwrap();
    let (f, f1) = (hyper_f(x).unwrap(), hyper_f1(x).unwrap());
    let ln16 = 16f64.ln();
    let split = (x.arg() - C::new(0.0, 1.0) * (x.norm() / 16.0).ln()) / PI
        - C::new(0.0, 1.0) / PI * (f1 / f + ln16);
    assert!((hp.tau - split).norm() < 1e-13);

    // F1/F + ln 16 = O(x): shrinks tenfold with x.
    let g = |v: f64| {
        let x = C::new(v, 0.0);
        (hyper_f1(x).unwrap() / hyper_f(x).unwrap() + ln16).norm()
    };
    let ratio = g(1e-3) / g(1e-4);
    assert!((ratio / 10.0 - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn tau_grows_towards_zero_along_rays() {
    for arg in [-2.5, -1.0, 0.0, 0.7, 3.0] {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=12 {
            let x = C::from_polar(0.9 * 0.5f64.powi(k), arg);
            let t = HalfPeriods::from_x(x).unwrap().tau;
            assert!(t.im > 0.0);
            assert!(t.im > prev, "Im τ not increasing at arg {arg}, step {k}");
            prev = t.im;
        }
    }
}

#[test]
fn half_periods_reject_the_cut() {
    assert!(matches!(HalfPeriods::from_x(C::new(-0.3, 0.0)), Err(Error::OutsideCutPlane(_))));
    assert!(HalfPeriods::from_x(C::new(0.0, 0.0)).is_err());
}

#[test]
fn weierstrass_periodic_even_and_lattice_sum() {
    let hp = HalfPeriods::from_x(C::new(0.3, 0.2)).unwrap();
    let u = 0.3 * hp.omega1 + 0.2 * hp.omega2;
    let p = weierstrass_p_fourier(u, &hp).unwrap();
    assert!(rel(weierstrass_p_fourier(u + 2.0 * hp.omega1, &hp).unwrap(), p) < 1e-10);
    assert!(rel(weierstrass_p_fourier(-u, &hp).unwrap(), p) < 1e-10);

    let u = 0.37 * hp.omega1 + 0.11 * hp.omega2;
    let want = p_lattice(u, hp.omega1, hp.omega2);
    let got = weierstrass_p_fourier(u, &hp).unwrap();
    assert!(rel(got, want) < 1e-8, "Fourier {got}, lattice {want}");
}

#[test]
fn weierstrass_fourier_matches_lattice_on_random_points() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 50 {
        let x = C::new(rng.gen_range(0.05..0.7), rng.gen_range(-0.4..0.4));
        let hp = HalfPeriods::from_x(x).unwrap();
        // Inside the strip |Im(u/2ω1)| < Im τ and away from lattice points.
        let (a, b) = (rng.gen_range(0.1..1.9), rng.gen_range(-0.9..0.9));
        let u = a * hp.omega1 + b * hp.omega2;
        let Ok(got) = weierstrass_p_fourier(u, &hp) else { continue };
        let want = p_lattice(u, hp.omega1, hp.omega2);
        assert!(rel(got, want) < 1e-8, "x = {x}, u = {u}: {got} vs {want}");
        checked += 1;
    }
}

fn small_complex() -> impl Strategy<Value = C> {
    (0.0..10.0f64, -PI..PI).prop_map(|(r, a)| C::from_polar(r, a))
}

fn near_integer(z: C) -> bool {
    (z - z.re.round()).norm() < 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gamma_recurrence(z in small_complex()) {
        prop_assume!(!near_integer(z));
        let lhs = complex_gamma(z + 1.0).unwrap();
        let rhs = z * complex_gamma(z).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-11, "z = {}", z);
    }

    #[test]
    fn gamma_reflection(z in small_complex()) {
        prop_assume!(!near_integer(z) && z.im.abs() < 5.0);
        let lhs = complex_gamma(z).unwrap() * complex_gamma(1.0 - z).unwrap();
        let rhs = PI / (PI * z).sin();
        prop_assert!(rel(lhs, rhs) < 1e-10, "z = {}", z);
    }

    #[test]
    fn digamma_recurrence(z in small_complex()) {
        prop_assume!(!near_integer(z));
        let d = digamma(z + 1.0).unwrap() - digamma(z).unwrap();
        prop_assert!((d - 1.0 / z).norm() < 1e-12 * (1.0 / z).norm().max(1.0), "z = {}", z);
    }
}
