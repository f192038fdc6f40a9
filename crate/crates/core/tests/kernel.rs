use kernel_spectra::bernoulli::log_factorial;
use kernel_spectra::kernel::{delta_r, h_eval, hs_norm_squared, inverse_moment, k_eval, kernel, KernelModel};
use kernel_spectra::quadrature::gauss_legendre;
use kernel_spectra::Error;
use proptest::prelude::*;

const HS_NORM_SQUARED: f64 = 8.152_061_052_882_599e-2;

/// `∫₀¹ (½ − {1/t})² log(1/t) dt` in the `t` variable: Gauss on the panels
/// `[1/(n+1), 1/n]`, where `{1/t} = 1/t − n`, and the mean value `1/12`
/// of the squared sawtooth below `1/N`.
fn hs_oracle() -> f64 {
    const N: u64 = 20_000;
    let rule = gauss_legendre(20).unwrap();
    let body: f64 = (1..N)
        .rev()
        .map(|n| {
            let nf = n as f64;
            rule.integrate(1.0 / (nf + 1.0), 1.0 / nf, |t| {
                let s = 0.5 - (1.0 / t - nf);
                s * s * (1.0 / t).ln()
            })
        })
        .sum();
    let nf = N as f64;
    body + (1.0 + nf.ln()) / (12.0 * nf)
}

/// Midpoint rule for `Δ_r(a, b)`; accurate to roughly the step size.
fn delta_oracle(a: f64, b: f64, r: f64) -> f64 {
    const STEPS: usize = 2_000_000;
    let h = 1.0 / STEPS as f64;
    (0..STEPS)
        .map(|i| {
            let z = (i as f64 + 0.5) * h;
            (kernel(a, z) - kernel(b, z)).abs() * z.powf(r)
        })
        .sum::<f64>()
        * h
}

#[test]
fn point_values() {
    assert_eq!(kernel(1.0, 1.0), 0.5);
    assert_eq!(kernel(0.5, 0.5), 0.5);
    assert_eq!(kernel(0.0, 0.7), 0.0);
    assert!((kernel(0.3, 0.7) - (0.5 - (1.0 / 0.21 - 4.0))).abs() < 1e-14);
    assert!((h_eval(0.0).unwrap() - 0.5).abs() < 1e-15);
    let v = 1.3;
    assert!((h_eval(v).unwrap() - (-v / 2.0f64).exp() * kernel(1.0, (-v).exp())).abs() < 1e-15);
}

#[test]
fn h_is_half_at_log_integers() {
    for n in 2..50u32 {
        let v = f64::from(n).ln();
        assert!((h_eval(v).unwrap() - 0.5 / f64::from(n).sqrt()).abs() < 1e-15, "n = {n}");
    }
}

#[test]
fn domain_errors() {
    assert!(matches!(k_eval(1.5, 0.5), Err(Error::Domain(_))));
    assert!(matches!(k_eval(-0.1, 0.5), Err(Error::Domain(_))));
    assert!(h_eval(-1.0).is_err());
    assert!(h_eval(f64::NAN).is_err());
    assert!(delta_r(0.0, 0.5, 0.0).is_err());
    assert!(delta_r(0.5, 0.6, -1.0).is_err());
}

#[test]
fn hs_norm_matches_t_domain_oracle() {
    let oracle = hs_oracle();
    assert!((oracle - HS_NORM_SQUARED).abs() < 1e-7, "oracle {oracle}");
    assert!((hs_norm_squared() - HS_NORM_SQUARED).abs() < 1e-12);
    assert!(hs_norm_squared().sqrt() < 0.5);
}

#[test]
fn delta_matches_midpoint_oracle() {
    for (a, b, r, frozen) in [(0.5, 0.7, 0.0, 3.244_870_747_901_222e-1), (0.2, 0.9, 1.0, 1.387_185_489_517_452e-1)] {
        let value = delta_r(a, b, r).unwrap();
        assert!((value - frozen).abs() < 1e-9, "({a}, {b}, {r}): {value}");
        assert!((delta_oracle(a, b, r) - frozen).abs() < 1e-4);
    }
}

#[test]
fn tighter_model_tolerance_agrees() {
    let fine = KernelModel { tolerance: 1e-12, ..KernelModel::default() };
    let a = fine.delta_r(0.31, 0.77, 0.5).unwrap();
    let b = delta_r(0.31, 0.77, 0.5).unwrap();
    // near z = 0 the rows oscillate without bound and the adaptive tail
    // settles at ~1e-8
    assert!((a - b).abs() < 1e-7);
}

#[test]
fn inverse_moment_both_branches() {
    // Stirling-folded branch (⌊1/x⌋ ≥ 20) against the direct formula.
    for x in [1.0 / 25.3, 1.0 / 20.0, 1.0 / 19.5, 0.3f64] {
        let r = 1.0 / x;
        let n = r.floor();
        let direct = log_factorial(n as u64) - n * r.ln() + r - 0.5 * (std::f64::consts::TAU * r).ln();
        assert!((inverse_moment(x) - direct).abs() < 1e-11, "x = {x}");
    }
    assert!((inverse_moment(0.3) + 7.750_545_784_060_98e-3).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric_and_bounded(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        prop_assert_eq!(kernel(x, y), kernel(y, x));
        prop_assert!(kernel(x, y).abs() <= 0.5);
    }

    #[test]
    fn delta_is_symmetric_and_within_its_bound(a in 0.05f64..=1.0, b in 0.05f64..=1.0) {
        let d = delta_r(a, b, 1.0).unwrap();
        prop_assert!((d - delta_r(b, a, 1.0).unwrap()).abs() < 1e-9);
        prop_assert!(d >= 0.0);
        prop_assert!(d <= 4.0 * (1.0 / b - 1.0 / a).abs() + 1e-9);
    }
}
