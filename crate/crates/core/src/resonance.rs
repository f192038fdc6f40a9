//! Tail estimates for sums and integrals of products of periodic Bernoulli
//! functions.
//!
//! Truncating `∫^∞ B̃₁(u/x)B̃₁(u/y)u⁻²du` or `Σ B̃₂(mα)/m²` leaves a tail
//! dominated by the slowly varying Fourier modes: those whose frequencies
//! nearly cancel because a ratio is close to a rational `p/q` with small
//! denominators. Summing such a family of modes in closed form gives a
//! rescaled periodic Bernoulli function, whose tail is available exactly
//! through [`sawtooth_tail`]. Everything else oscillates and contributes at
//! the next order in the truncation point.

use crate::bernoulli::{b1, b2, sawtooth_tail};

/// Largest `p·q` considered for `B̃₁(u/x)B̃₁(u/y)` resonances.
const PRODUCT_RESONANCE_LIMIT: u64 = 400;
/// Largest denominator considered for `B̃₂(mα)` resonances.
const SERIES_RESONANCE_LIMIT: u64 = 32;
/// Largest `h²k` considered for `B̃₂(t)B̃₁(rt)` resonances.
const MIXED_RESONANCE_LIMIT: u64 = 64;
/// Modes with `|ω|·cutoff` beyond this are oscillatory at the cutoff scale.
const SLOW: f64 = 50.0;

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `∫_U^∞ B̃₂(|ω|u) u⁻² du = |ω| ∫_{|ω|U}^∞ B̃₂(s) s⁻² ds`, continuous at ω = 0.
pub(crate) fn scaled_b2_tail(omega: f64, u: f64) -> f64 {
    let w = omega.abs();
    if w * u < 1e-300 || w == 0.0 {
        return 1.0 / (6.0 * u);
    }
    w * sawtooth_tail(2, 2.0, w * u)
}

/// Estimate of `∫_U^∞ B̃₁(u/x) B̃₁(u/y) u⁻² du`.
///
/// A primitive resonance `p/x ≈ q/y` contributes the modes
/// `(jp, jq)`, which sum to `B̃₂(ω u)/(2pq)` with `ω = p/x − q/y`.
pub(crate) fn sawtooth_product_tail(x: f64, y: f64, u: f64) -> f64 {
    let mut total = 0.0;
    for q in 1..=PRODUCT_RESONANCE_LIMIT {
        let p = (q as f64 * x / y).round().max(1.0) as u64;
        if p * q > PRODUCT_RESONANCE_LIMIT {
            continue;
        }
        let omega = p as f64 / x - q as f64 / y;
        if omega.abs() * u < SLOW && gcd(p, q) == 1 {
            total += scaled_b2_tail(omega, u) / (2.0 * (p * q) as f64);
        }
    }
    total
}

/// Estimate of `Σ_{m>M} B̃₂(mα)/m²` for integer `M`.
///
/// Near `α ≈ p/q` the modes `h = jq` sum to `B̃₂(mβ)/q²` with
/// `β = |qα − p|`, a slowly varying sequence whose tail follows from
/// Euler–Maclaurin.
pub(crate) fn b2_series_tail(alpha: f64, m: f64) -> f64 {
    let mut total = 0.0;
    for q in 1..=SERIES_RESONANCE_LIMIT {
        let p = (q as f64 * alpha).round();
        let beta = (q as f64 * alpha - p).abs();
        if beta * m >= 10.0 || gcd(p as u64, q) != 1 {
            continue;
        }
        let t = beta * m;
        let m2 = m * m;
        let slow = scaled_b2_tail(beta, m)
            - b2(t) / (2.0 * m2)
            - (2.0 * beta * b1(t) / m2 - 2.0 * b2(t) / (m2 * m)) / 12.0;
        total += slow / (q * q) as f64;
    }
    total
}

/// Estimate of `∫_T^∞ B̃₂(t) B̃₁(rt) t⁻³ dt`.
///
/// With `ω₀ = k₀r − h₀` small, the modes `(jh₀, jk₀)` sum to
/// `−B̃₃(ω₀t)/(3h₀²k₀)`.
pub(crate) fn b2b1_tail(r: f64, t: f64) -> f64 {
    let mut total = 0.0;
    for k in 1..=MIXED_RESONANCE_LIMIT {
        let h = (k as f64 * r).round();
        if h < 1.0 {
            continue;
        }
        let h = h as u64;
        if h * h * k > MIXED_RESONANCE_LIMIT || gcd(h, k) != 1 {
            continue;
        }
        let omega = k as f64 * r - h as f64;
        if omega == 0.0 || omega.abs() * t >= SLOW {
            continue;
        }
        let i3 = sawtooth_tail(3, 3.0, omega.abs() * t);
        total -= omega.signum() * omega * omega * i3 / (3.0 * (h * h * k) as f64);
    }
    total
}
