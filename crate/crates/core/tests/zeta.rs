use std::f64::consts::{PI, TAU};

use kernel_spectra::kernel::{inverse_moment, kernel};
use kernel_spectra::quadrature::{gauss_legendre, kernel_breakpoints};
use kernel_spectra::zeta::{
    em_identity_residual, euler_limit_residual, hankel_apply, hankel_tail_bound, hankel_via_x, kernel_moment,
    laplace_h_residual, stirling_alt_extrapolated, stirling_alt_residual, stirling_rhs, zeta, zeta_connect_residual,
    ZetaEvaluator,
};
use kernel_spectra::Error;
use proptest::prelude::*;

/// `ζ(s)` for `s > 1` by the partial sum plus the integral and the first
/// Euler–Maclaurin corrections of the tail.
fn zeta_oracle(s: f64) -> f64 {
    let n = 1000.0f64;
    let head: f64 = (1..1000).map(|k| (k as f64).powf(-s)).sum();
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
}

#[test]
fn special_values() {
    assert!((zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
    assert!((zeta(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-14);
    assert!((zeta(0.0).unwrap() + 0.5).abs() < 1e-14);
    assert!((zeta(3.0).unwrap() - 1.202_056_903_159_594_3).abs() < 1e-14);
    assert!((zeta(0.5).unwrap() + 1.460_354_508_809_586_8).abs() < 1e-13);
    assert!((zeta(-0.5).unwrap() + 0.207_886_224_977_354_57).abs() < 1e-13);
}

#[test]
fn pole_and_domain() {
    assert!(matches!(zeta(1.0), Err(Error::Pole(s)) if s == 1.0));
    assert!(matches!(zeta(-1.0), Err(Error::Domain(_))));
    assert!(zeta(f64::NAN).is_err());
    assert!(stirling_alt_residual(0.3, 0.5).is_err());
    assert!(stirling_alt_residual(0.3, 0.0).is_err());
}

#[test]
fn stirling_right_hand_side() {
    // log(⌊1/x⌋!) − ⌊1/x⌋ log(1/x) + 1/x − ½ log(2π/x)
    assert!((stirling_rhs(1.0).unwrap() - (1.0 - 0.5 * TAU.ln())).abs() < 1e-15);
    assert!((stirling_rhs(1.0).unwrap() - 0.081_061_466_795_327_26).abs() < 1e-15);
    assert!((stirling_rhs(0.3).unwrap() - inverse_moment(0.3)).abs() < 1e-15);
}

#[test]
fn kernel_moments_against_breakpoint_quadrature() {
    // ∫₀¹ K(x, y) y^s dy with Gauss between the jumps down to y = 1e-6;
    // below that the integrand is bounded by y^s and averages out.
    let (x, s) = (0.6, 1.0);
    let rule = gauss_legendre(8).unwrap();
    let pts = kernel_breakpoints(x, 1e-6);
    let oracle: f64 = pts.windows(2).map(|w| rule.integrate(w[0], w[1], |y| kernel(x, y) * y.powf(s))).sum();
    let value = kernel_moment(x, s).unwrap();
    assert!((value + 2.092_490_715_524_107_6e-2).abs() < 1e-15);
    assert!((value - oracle).abs() < 1e-11);
}

#[test]
fn connection_identities_hold() {
    for (s, x) in [(1.0, 0.3), (0.5, 0.7), (2.0, 0.45), (3.5, 0.2)] {
        assert!(zeta_connect_residual(s, x).unwrap().abs() < 1e-12, "(s, x) = ({s}, {x})");
        assert!(em_identity_residual(s, x).unwrap().abs() < 1e-10, "(s, x) = ({s}, {x})");
    }
    assert!(euler_limit_residual(0.4).unwrap().abs() < 1e-12);
    for s in [0.5, 2.0, 3.0] {
        assert!(laplace_h_residual(s).unwrap().abs() < 1e-12);
    }
}

#[test]
fn stirling_limit_residual_halves_with_the_cutoff() {
    for x in [0.3, 1.0] {
        let r = stirling_alt_residual(x, 1e-6).unwrap();
        let r_half = stirling_alt_residual(x, 5e-7).unwrap();
        assert!(r.abs() < 1e-6 && r_half.abs() < r.abs());
        assert!((r / r_half - 2.0).abs() < 1e-3, "ratio {}", r / r_half);
        assert!(stirling_alt_extrapolated(x, 1e-6).unwrap().abs() < 1e-11);
    }
}

#[test]
fn hankel_routes_agree() {
    // F(v) = e^{−3v/2} ⇔ f(y) = y on the x side.
    for u in [0.0, 0.5, 2.0, 5.0] {
        let a = hankel_apply(|v| (-1.5 * v).exp(), u).unwrap();
        let b = hankel_via_x(|y| y, u).unwrap();
        assert!((a - b).abs() < 1e-12, "u = {u}: {a} vs {b}");
        assert!(a.abs() <= hankel_tail_bound(u, 1.0 / 3f64.sqrt()));
    }
    assert!((hankel_apply(|v| (-1.5 * v).exp(), 0.0).unwrap() - 7.246_703e-2).abs() < 1e-8);
}

#[test]
fn evaluator_parameters() {
    let coarse = ZetaEvaluator { truncation: 5, depth: 3 };
    assert!((coarse.zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_direct_summation(s in 1.5f64..12.0) {
        prop_assert!((zeta(s).unwrap() - zeta_oracle(s)).abs() < 1e-12);
    }

    #[test]
    fn bracketed_by_the_integral_test(s in 1.01f64..20.0) {
        let z = zeta(s).unwrap();
        prop_assert!(z > 1.0 / (s - 1.0) && z < 1.0 / (s - 1.0) + 1.0);
    }

    #[test]
    fn decreasing_on_the_real_axis(s in 1.05f64..10.0, ds in 0.01f64..1.0) {
        prop_assert!(zeta(s + ds).unwrap() < zeta(s).unwrap());
    }
}
