//! Periodic Bernoulli functions, fractional parts and log-factorials.
//!
//! `B̃ₙ(t) = Bₙ({t})` for the Bernoulli polynomials
//!
//! ```text
//! B₁(t) = t − 1/2
//! B₂(t) = t² − t + 1/6
//! B₃(t) = t³ − (3/2)t² + (1/2)t
//! B₄(t) = t⁴ − 2t³ + t² − 1/30
//! ```
//!
//! The checked entry points ([`frac`], [`bernoulli_tilde`]) reject
//! non-finite input; the `b1`…`b4` helpers skip the check and are meant for
//! inner loops whose arguments are known to be finite.

use crate::error::{domain, Result};
use crate::quadrature::gauss_legendre;

/// Order of a periodic Bernoulli function. Only orders 1 to 4 exist here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BernoulliOrder(u8);

impl BernoulliOrder {
    pub fn new(n: u8) -> Result<Self> {
        if (1..=4).contains(&n) {
            Ok(Self(n))
        } else {
            domain(format!("Bernoulli order must be in 1..=4, got {n}"))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

/// Fractional part `t − ⌊t⌋ ∈ [0, 1)` (floor convention, so `frac(−0.25) = 0.75`).
pub fn frac(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return domain(format!("frac of non-finite value {t}"));
    }
    Ok(fract(t))
}

/// Unchecked fractional part. Tiny negative inputs whose true fractional
/// part rounds up to 1 are mapped to the largest double below 1.
#[inline]
pub fn fract(t: f64) -> f64 {
    let r = t - t.floor();
    if r < 1.0 {
        r
    } else {
        ONE_MINUS_ULP
    }
}

const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

#[inline]
pub fn b1(t: f64) -> f64 {
    fract(t) - 0.5
}

#[inline]
pub fn b2(t: f64) -> f64 {
    let u = fract(t);
    u * (u - 1.0) + 1.0 / 6.0
}

#[inline]
pub fn b3(t: f64) -> f64 {
    let u = fract(t);
    u * (u - 0.5) * (u - 1.0)
}

#[inline]
pub fn b4(t: f64) -> f64 {
    let u = fract(t);
    let v = u * (u - 1.0);
    v * v - 1.0 / 30.0
}

/// `Bₙ(u)` for `u` already reduced to `[0, 1)`.
#[inline]
pub(crate) fn poly(n: usize, u: f64) -> f64 {
    match n {
        1 => u - 0.5,
        2 => u * (u - 1.0) + 1.0 / 6.0,
        3 => u * (u - 0.5) * (u - 1.0),
        4 => {
            let v = u * (u - 1.0);
            v * v - 1.0 / 30.0
        }
        _ => unreachable!("Bernoulli order {n}"),
    }
}

/// Periodic Bernoulli function `B̃ₙ(t)`.
pub fn bernoulli_tilde(order: BernoulliOrder, t: f64) -> Result<f64> {
    let u = frac(t)?;
    Ok(poly(order.get() as usize, u))
}

/// Bernoulli numbers `B₀ … B₂₀` (with `B₁ = −1/2`).
pub(crate) const BERNOULLI_NUMBERS: [f64; 21] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
    0.0,
    43867.0 / 798.0,
    0.0,
    -174611.0 / 330.0,
];

const LOG_FACTORIAL_THRESHOLD: u64 = 256;

/// `log(n!)`: direct summation below 256, Stirling series from there on.
pub fn log_factorial(n: u64) -> f64 {
    if n < LOG_FACTORIAL_THRESHOLD {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        stirling_log_factorial(n as f64)
    }
}

pub(crate) fn stirling_log_factorial(n: f64) -> f64 {
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    n * n.ln() - n + 0.5 * (std::f64::consts::TAU * n).ln() + series
}

/// `∫_w^∞ B̃ₙ(u) u^{−σ} du` for `n ∈ 1..=4`, `σ > 0`, `w > 0`.
///
/// The integral is done exactly on `[w, 1]` (where `B̃ₙ` is a polynomial),
/// by Gauss–Legendre on unit intervals up to a moderate integer `N`, and by
/// the Euler–Maclaurin (repeated integration by parts) expansion beyond `N`,
/// which at an integer endpoint only needs Bernoulli numbers.
pub fn sawtooth_tail(n: usize, sigma: f64, w: f64) -> f64 {
    assert!((1..=4).contains(&n), "order {n} outside 1..=4");
    assert!(sigma > 0.0 && w > 0.0, "need sigma > 0 and w > 0");
    const ASYMPTOTIC_START: f64 = 48.0;
    let mut total = 0.0;
    let mut a = w;
    if a < 1.0 {
        total += polynomial_moment(n, sigma, a);
        a = 1.0;
    }
    let rule = gauss_legendre(20).expect("order 20 is valid");
    let piece = |lo: f64, hi: f64, shift: f64| -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, wt)| {
                let u = mid + half * t;
                wt * poly(n, u - shift) * u.powf(-sigma)
            })
            .sum::<f64>()
            * half
    };
    let first = a.ceil();
    if first > a {
        total += piece(a, first, a.floor());
    }
    let start = first.max(ASYMPTOTIC_START);
    let mut k = first;
    while k < start {
        total += piece(k, k + 1.0, k);
        k += 1.0;
    }
    total + integer_tail(n, sigma, start)
}

/// `∫_a^1 Bₙ(u) u^{−σ} du` for `0 < a < 1`, exactly from the monomials.
fn polynomial_moment(n: usize, sigma: f64, a: f64) -> f64 {
    const C1: [f64; 2] = [-0.5, 1.0];
    const C2: [f64; 3] = [1.0 / 6.0, -1.0, 1.0];
    const C3: [f64; 4] = [0.0, 0.5, -1.5, 1.0];
    const C4: [f64; 5] = [-1.0 / 30.0, 0.0, 1.0, -2.0, 1.0];
    let coeffs: &[f64] = match n {
        1 => &C1,
        2 => &C2,
        3 => &C3,
        _ => &C4,
    };
    let ln_a = a.ln();
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| {
            let e = j as f64 - sigma + 1.0;
            // (1 − a^e)/e, with the e → 0 limit −ln a
            let m = if e.abs() < 1e-300 {
                -ln_a
            } else {
                -(e * ln_a).exp_m1() / e
            };
            c * m
        })
        .sum()
}

/// Euler–Maclaurin tail from an integer `N`:
/// `Iₙ(σ) = −B_{n+1} N^{−σ}/(n+1) + σ/(n+1) · I_{n+1}(σ+1)`, iterated.
fn integer_tail(n: usize, sigma: f64, big_n: f64) -> f64 {
    let mut total = 0.0;
    let mut factor = 1.0;
    let mut power = big_n.powf(-sigma);
    let mut k = 0usize;
    while n + 1 + k < BERNOULLI_NUMBERS.len() {
        let m = n + 1 + k;
        let term = -BERNOULLI_NUMBERS[m] * power / m as f64 * factor;
        total += term;
        if BERNOULLI_NUMBERS[m] != 0.0 && term.abs() <= 1e-18 * total.abs() {
            break;
        }
        factor *= (sigma + k as f64) / m as f64;
        power /= big_n;
        k += 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_of_b2_over_t_squared_matches_asymptotics() {
        // ∫_T^∞ B̃₂(t) t⁻² dt ≈ 1/(180 T³) − 1/(630 T⁵) at integer T
        let t = 100.0f64;
        let v = sawtooth_tail(2, 2.0, t);
        let approx = 1.0 / (180.0 * t.powi(3)) - 1.0 / (630.0 * t.powi(5));
        assert!((v - approx).abs() < 1e-16, "{v} vs {approx}");
    }

    #[test]
    fn tail_below_one_is_continuous() {
        let a = sawtooth_tail(2, 2.0, 1.0 - 1e-12);
        let b = sawtooth_tail(2, 2.0, 1.0);
        assert!((a - b).abs() < 1e-10);
    }
}
