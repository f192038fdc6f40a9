mod common;

use kernel_spectra::calculus::{
    asymptotic_residuals, derivative, derivative_series_sum, expansion_coefficients, iterated_derivative_residual,
    one_sided_derivative, p_eval, parseval_from, phi0, phi1, phi1_quadrature, phi_sigma, pq_norms_squared, q_eval,
    DerivativeSeriesConfig, Side, C0, K2_AT_ONE,
};
use kernel_spectra::kernel::kernel;
use kernel_spectra::quadrature::gauss_legendre;
use kernel_spectra::spectra::{eigenfunction, EigenfunctionHandle};
use proptest::prelude::*;

use common::{apply_kernel, integrate_reciprocal_panels, spectrum};

/// `Φ₁` and `Φ₀(1)` of the leading eigenfunction, frozen.
const PHI1: f64 = 2.775_818_811_385_554_2e-1;
const PHI0_AT_ONE: f64 = 2.809_094_472_750_443e-1;

fn leading() -> EigenfunctionHandle {
    eigenfunction(spectrum(), 1).unwrap()
}

#[test]
fn constants() {
    assert!((K2_AT_ONE - (std::f64::consts::TAU.ln() - 1.75)).abs() < 1e-15);
    assert!((C0 - (1.0 / 3.0 + 1.0 / (72.0 * 3f64.sqrt() * std::f64::consts::E))).abs() < 1e-15);
}

#[test]
fn phi1_by_three_routes() {
    let h = leading();
    assert!((phi1(&h) - PHI1).abs() < 1e-12);
    assert!((phi1_quadrature(&h, 4000) - PHI1).abs() < 5e-5);
    // the eigenfunction itself is good to ~1e-4, which bounds the agreement
    // of any two routes
    let oracle = integrate_reciprocal_panels(|y| h.evaluate(y).unwrap() / y);
    assert!((oracle - PHI1).abs() < 2e-4, "oracle {oracle}");
}

#[test]
fn moments_of_phi() {
    let h = leading();
    assert!((phi0(&h, 1.0).unwrap() - PHI0_AT_ONE).abs() < 1e-12);
    let oracle = integrate_reciprocal_panels(|y| h.evaluate(y).unwrap());
    assert!((oracle - PHI0_AT_ONE).abs() < 2e-4, "oracle {oracle}");
    assert_eq!(phi0(&h, 0.0).unwrap(), 0.0);
    assert!(phi0(&h, 1.2).is_err());
    // Φ(x, y; σ) = ∫ₓ^y φ(z) z^{−σ} dz: Gauss oracle on [0.3, 0.9], where
    // the only kinks are at 1/2 and 1/3.
    let rule = gauss_legendre(12).unwrap();
    let f = |z: f64| h.evaluate(z).unwrap() * z.powf(-1.5);
    let oracle: f64 = [0.3, 1.0 / 3.0, 0.5, 0.9]
        .windows(2)
        .map(|w| (0..20).map(|k| {
            let s = (w[1] - w[0]) / 20.0;
            rule.integrate(w[0] + k as f64 * s, w[0] + (k + 1) as f64 * s, f)
        }).sum::<f64>())
        .sum();
    let value = phi_sigma(&h, 0.3, 0.9, 1.5).unwrap();
    assert!((value - oracle).abs() < 1e-5 * oracle.abs(), "{value} vs {oracle}");
    assert!((phi_sigma(&h, 0.9, 0.3, 1.5).unwrap() + value).abs() < 1e-15);
    assert!(phi_sigma(&h, 0.3, 0.9, 3.0).is_err());
}

#[test]
fn derivative_series_matches_interpolant_slope() {
    let cfg = DerivativeSeriesConfig::default();
    for j in [1, 3] {
        let h = eigenfunction(spectrum(), j).unwrap();
        let lambda = h.eigenvalue().abs();
        for x in [0.07, 0.29, 0.61, 0.93] {
            let series = derivative(&h, x, &cfg).unwrap();
            let slope = h.evaluate_derivative(x).unwrap();
            assert!((series - slope).abs() < 1e-3 * lambda.max(slope.abs()), "j = {j}, x = {x}");
            assert!((q_eval(&h, x).unwrap() - x * slope).abs() < 1e-12 * lambda);
        }
    }
}

#[test]
fn derivative_domain() {
    let h = leading();
    let cfg = DerivativeSeriesConfig::default();
    assert!(derivative(&h, 0.5, &cfg).is_err());
    assert!(derivative(&h, 1.0, &cfg).is_err());
    assert!(derivative(&h, 0.0, &cfg).is_err());
    assert!(one_sided_derivative(&h, 0, Side::Left, &cfg).is_err());
    assert_eq!(q_eval(&h, 0.0).unwrap(), 0.0);
    assert_eq!(p_eval(&h, 0.0).unwrap(), 0.0);
    assert!(p_eval(&h, 1.1).is_err());
}

#[test]
fn jumps_at_reciprocal_integers() {
    let h = leading();
    let cfg = DerivativeSeriesConfig::default();
    let (lambda, f1) = (h.eigenvalue(), h.evaluate(1.0).unwrap());
    for n in 2..=5u64 {
        let left = one_sided_derivative(&h, n, Side::Left, &cfg).unwrap();
        let right = one_sided_derivative(&h, n, Side::Right, &cfg).unwrap();
        let expected = -lambda * f1 * n as f64;
        // φ₁ and the truncated series differ at the 1e-5 level
        assert!((right - left - expected).abs() < 1e-4 * expected.abs(), "n = {n}: {}", right - left);
        // the one-sided limits agree with the series just off 1/n
        let x = 1.0 / n as f64;
        assert!((derivative(&h, x * (1.0 - 1e-7), &cfg).unwrap() - left).abs() < 1e-3 * lambda);
        assert!((derivative(&h, x * (1.0 + 1e-7), &cfg).unwrap() - right).abs() < 1e-3 * lambda);
    }
}

#[test]
fn p_is_the_kernel_image_of_q() {
    let h = leading();
    let lambda = h.eigenvalue();
    let f1 = h.evaluate(1.0).unwrap();
    for x in [0.35, 0.63, 0.88] {
        let p = p_eval(&h, x).unwrap();
        let oracle = apply_kernel(-lambda, x, 1e-3, |y| q_eval(&h, y).unwrap());
        // φ = λKg with g a discontinuous piecewise interpolant of φ, so Q
        // carries small jumps wherever 1/(ky) meets a panel edge; direct
        // quadrature of KQ settles ~1e-3|λ| away
        assert!((p - oracle).abs() < 2e-3 * lambda.abs(), "x = {x}: {p} vs {oracle}");
        // xφ′ + φ − λφ(1)K(x, 1) = P
        let lhs = q_eval(&h, x).unwrap() + h.evaluate(x).unwrap() - lambda * f1 * kernel(x, 1.0);
        assert!((lhs - p).abs() < 1e-3, "x = {x}: {lhs} vs {p}");
    }
    let (p2, q2) = pq_norms_squared(&h);
    let p2_oracle = integrate_reciprocal_panels(|y| p_eval(&h, y).unwrap().powi(2));
    assert!((p2 - p2_oracle).abs() < 5e-3 * p2, "{p2} vs {p2_oracle}");
    assert!(q2 > 0.0);
}

#[test]
fn coefficients_and_parseval() {
    let spec = spectrum();
    let h = leading();
    let c = expansion_coefficients(&h, spec, 10).unwrap();
    assert_eq!(c.a.len(), 10);
    assert!(c.relation_residual(h.eigenvalue()) < 1e-4 * h.eigenvalue().abs());
    let p = parseval_from(&h, &c);
    assert!(p.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    assert!(p.lhs <= p.rhs && p.a_squares <= p.p_norm_squared);
    assert!((p.gap - (p.rhs - p.lhs)).abs() < 1e-15);
    let leading5 = c.leading(5);
    assert_eq!(leading5.truncation, 5);
    assert_eq!(leading5.b[..], c.b[..5]);
    assert!(expansion_coefficients(&h, spec, spec.len() + 1).is_err());
}

#[test]
fn small_x_behaviour() {
    let h = leading();
    let xs: Vec<f64> = (1..=8).map(|k| 0.9 * 0.5f64.powi(k)).collect();
    let rows = asymptotic_residuals(&h, &xs).unwrap();
    for row in &rows {
        assert!(row.r1.is_finite() && row.r2.is_finite());
        assert!(row.r1.abs() < 10.0 * h.eigenvalue().powi(2) && row.r2.abs() < 10.0 * h.eigenvalue().powi(2));
    }
    assert!(asymptotic_residuals(&h, &[0.0]).is_err());
    let lambda = h.eigenvalue();
    assert!(iterated_derivative_residual(&h, 0.37).unwrap() < 1e-3 * lambda * lambda);
}

#[test]
fn series_tail_bound_shrinks_with_truncation() {
    let h = leading();
    let lambda = h.eigenvalue();
    let short = DerivativeSeriesConfig { truncation: 200, ..Default::default() };
    let long = DerivativeSeriesConfig::default();
    assert!(long.tail_bound(lambda, 0.3) < short.tail_bound(lambda, 0.3));
    let a = derivative_series_sum(&h, 0.3, short.truncation);
    let b = derivative_series_sum(&h, 0.3, long.truncation);
    assert!((a - b).abs() <= short.tail_bound(lambda, 0.3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn series_derivative_matches_finite_differences(x in 0.1f64..0.95) {
        let n = (1.0 / x).round();
        prop_assume!((x - 1.0 / n).abs() > 1e-3);
        let h = leading();
        let step = 1e-6;
        let fd = (h.evaluate(x + step).unwrap() - h.evaluate(x - step).unwrap()) / (2.0 * step);
        let series = derivative(&h, x, &DerivativeSeriesConfig::default()).unwrap();
        prop_assert!((series - fd).abs() < 1e-3 * fd.abs().max(h.eigenvalue().abs()), "{} vs {}", series, fd);
    }
}
