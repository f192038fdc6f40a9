use kernel_spectra::bernoulli::{b1, b2, b3, b4, bernoulli_tilde, frac, log_factorial, sawtooth_tail, BernoulliOrder};
use kernel_spectra::Error;
use proptest::prelude::*;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Bernoulli polynomial from `Bₙ(u) = Σ C(n,k) Bₖ u^{n−k}`, an independent
/// route to the closed forms used by the crate.
fn bernoulli_poly(n: usize, u: f64) -> f64 {
    const B: [f64; 5] = [1.0, -0.5, 1.0 / 6.0, 0.0, -1.0 / 30.0];
    let binom = |n: usize, k: usize| -> f64 { (1..=k).map(|i| (n + 1 - i) as f64 / i as f64).product() };
    (0..=n).map(|k| binom(n, k) * B[k] * u.powi((n - k) as i32)).sum()
}

#[test]
fn orders_outside_one_to_four_are_rejected() {
    assert!(matches!(BernoulliOrder::new(0), Err(Error::Domain(_))));
    assert!(matches!(BernoulliOrder::new(5), Err(Error::Domain(_))));
    assert_eq!(BernoulliOrder::new(3).unwrap().get(), 3);
}

#[test]
fn frac_uses_the_floor_convention() {
    assert_eq!(frac(-0.25).unwrap(), 0.75);
    assert_eq!(frac(3.0).unwrap(), 0.0);
    assert!(frac(f64::NAN).is_err());
    assert!(frac(f64::INFINITY).is_err());
}

#[test]
fn values_at_rational_points() {
    assert_eq!(b1(0.25), -0.25);
    assert!((b2(0.5) + 1.0 / 12.0).abs() < 1e-16);
    assert!((b2(0.0) - 1.0 / 6.0).abs() < 1e-16);
    assert!((b4(0.0) + 1.0 / 30.0).abs() < 1e-16);
    assert!(b3(0.5).abs() < 1e-16);
}

#[test]
fn log_factorial_small_and_stirling_branches() {
    assert!((log_factorial(10) - 3_628_800f64.ln()).abs() < 1e-12);
    assert_eq!(log_factorial(0), 0.0);
    assert_eq!(log_factorial(1), 0.0);
    // Around the switch to the Stirling series the two must agree with a
    // plain sum of logarithms.
    for n in [255u64, 256, 257, 1000] {
        let direct: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        assert!((log_factorial(n) - direct).abs() < 1e-9 * direct, "n = {n}");
    }
}

#[test]
fn sawtooth_tail_matches_zeta_representations() {
    // ∫₁^∞ B̃₁(u) u⁻² du = 1/2 − γ.
    assert!((sawtooth_tail(1, 2.0, 1.0) - (0.5 - EULER_GAMMA)).abs() < 1e-10);
    // ζ(s) = 1/(s−1) + 1/2 − s ∫₁^∞ B̃₁(u) u^{−s−1} du at s = 2.
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    assert!((sawtooth_tail(1, 3.0, 1.0) - (1.5 - zeta2) / 2.0).abs() < 1e-10);
    // Starting below 1 adds ∫_w^1 B₂(u) u^{−3/2} du, a polynomial moment.
    let w: f64 = 0.3;
    let antiderivative = |u: f64| 2.0 / 3.0 * u.powf(1.5) - 2.0 * u.sqrt() - 1.0 / (3.0 * u.sqrt());
    let head = antiderivative(1.0) - antiderivative(w);
    assert!((sawtooth_tail(2, 1.5, w) - head - sawtooth_tail(2, 1.5, 1.0)).abs() < 1e-9);
}

proptest! {
    #[test]
    fn polynomials_match_the_binomial_route(n in 1usize..=4, u in 0.0f64..1.0) {
        let order = BernoulliOrder::new(n as u8).unwrap();
        prop_assert!((bernoulli_tilde(order, u).unwrap() - bernoulli_poly(n, u)).abs() < 1e-13);
    }

    #[test]
    fn periodic_in_t(n in 1u8..=4, t in -50.0f64..50.0, k in -5i32..5) {
        let order = BernoulliOrder::new(n).unwrap();
        let a = bernoulli_tilde(order, t).unwrap();
        let b = bernoulli_tilde(order, t + k as f64).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn parity_under_reflection(n in 1u8..=4, t in 0.001f64..0.999) {
        let order = BernoulliOrder::new(n).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = bernoulli_tilde(order, -t).unwrap();
        prop_assert!((lhs - sign * bernoulli_tilde(order, t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn frac_lies_in_unit_interval(t in -1e12f64..1e12) {
        let f = frac(t).unwrap();
        prop_assert!((0.0..1.0).contains(&f));
    }

    #[test]
    fn periodic_functions_are_bounded(t in -1e6f64..1e6) {
        prop_assert!(b1(t).abs() <= 0.5);
        prop_assert!(b2(t).abs() <= 1.0 / 6.0 + 1e-15);
        prop_assert!(b3(t).abs() <= 3f64.sqrt() / 36.0 + 1e-15);
        prop_assert!(b4(t).abs() <= 1.0 / 30.0 + 1e-15);
    }
}
