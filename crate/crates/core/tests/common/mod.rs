#![allow(dead_code)]

use std::sync::OnceLock;

use kernel_spectra::kernel::kernel;
use kernel_spectra::quadrature::{gauss_legendre, kernel_breakpoints};
use kernel_spectra::spectra::{Spectrum, DEFAULT_ORDER, DEFAULT_PANELS};

/// The default spectrum, shared by the tests of one binary.
pub fn spectrum() -> &'static Spectrum {
    static SPECTRUM: OnceLock<Spectrum> = OnceLock::new();
    SPECTRUM.get_or_init(|| Spectrum::compute(DEFAULT_PANELS, DEFAULT_ORDER).expect("default spectrum"))
}

/// Leading eigenvalues of the default spectrum.
pub const EIGENVALUES: [f64; 12] = [
    1.254_879_867_699_001e1,
    1.448_597_430_900_670_7e1,
    -1.448_928_818_481_672_4e1,
    -1.764_410_551_727_688_4e1,
    1.810_783_685_312_236_1e1,
    -1.975_620_726_024_976_3e1,
    2.178_753_881_409_981_1e1,
    -2.265_614_685_510_356e1,
    2.271_169_248_728_076_8e1,
    -2.397_809_556_872_162e1,
    2.648_824_470_928_824_2e1,
    -2.699_460_473_434_299_3e1,
];

/// `∫₀¹ f` with 8-point Gauss panels between the points `1/n`, split in
/// four for `n < 400`, down to `1/20000`, and a uniform split below; suited
/// to eigenfunctions, whose derivatives jump at reciprocal integers.
pub fn integrate_reciprocal_panels(f: impl Fn(f64) -> f64) -> f64 {
    const LAST: u32 = 20_000;
    let rule = gauss_legendre(8).unwrap();
    let mut total = 0.0;
    for n in 1..LAST {
        let (a, b) = (1.0 / f64::from(n + 1), 1.0 / f64::from(n));
        let pieces = if n < 400 { 4 } else { 1 };
        let h = (b - a) / f64::from(pieces);
        for k in 0..pieces {
            total += rule.integrate(a + f64::from(k) * h, a + f64::from(k + 1) * h, &f);
        }
    }
    let edge = 1.0 / f64::from(LAST);
    for k in 0..4 {
        total += rule.integrate(edge * f64::from(k) / 4.0, edge * f64::from(k + 1) / 4.0, &f);
    }
    total
}

/// `λ ∫₀¹ K(x, y) g(y) dy` by Gauss on four sub-panels between the jumps
/// of `K(x, ·)` and the points `1/n` down to `cutoff`, with the remainder
/// dropped.
pub fn apply_kernel(lambda: f64, x: f64, cutoff: f64, g: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(8).unwrap();
    let mut pts = kernel_breakpoints(x, cutoff);
    pts.extend((1..).map(|n| 1.0 / f64::from(n)).take_while(|&p| p > cutoff));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let h = (w[1] - w[0]) / 4.0;
        for k in 0..4 {
            total += rule.integrate(w[0] + k as f64 * h, w[0] + (k + 1) as f64 * h, |y| kernel(x, y) * g(y));
        }
    }
    lambda * total
}
