//! The iterated kernel `K₂(x, y) = ∫₀¹ K(x, z) K(z, y) dz` by three
//! independent routes, plus the auxiliary integrals `I₀` and `I`.
//!
//! * [`K2Evaluator::quadrature`] integrates the definition directly. With
//!   `u = 1/z` the integrand is `B̃₁(u/x)B̃₁(u/y)u⁻²`, a quadratic in `u`
//!   times `u⁻²` between consecutive multiples of `x` and `y`.
//! * [`K2Evaluator::closed`] evaluates the four-term Bernoulli-function
//!   representation: a product term, two improper integrals over
//!   `t ≥ 1/x` and a series over `m > 1/y`.
//! * [`k2_diag_exact`] is the exact diagonal in terms of `log(n!)`.
//!
//! The truncated tails of the integrals and series are not dropped: their
//! slowly varying resonant parts are added back in closed form (see
//! `resonance`), which lets modest truncations reach ~1e-10 accuracy.

use crate::bernoulli::{b1, b2, log_factorial, sawtooth_tail};
use crate::error::{domain, Result};
use crate::kernel::kernel;
use crate::quadrature::gauss_legendre;
use crate::resonance::{b2_series_tail, b2b1_tail, gcd, sawtooth_product_tail};

/// Truncation parameters shared by the `K₂` routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K2Evaluator {
    /// Series terms summed beyond `m = ⌈1/y⌉` (closed route); at least
    /// `20/y` terms are always used.
    pub series_terms: u64,
    /// Length of the `t`-range integrated numerically beyond `t = 1/x`
    /// (closed route).
    pub integral_span: f64,
    /// Upper limit `U` of the `u = 1/z` integration (quadrature route);
    /// the cost grows like `U / min(x, y)`.
    pub quadrature_extent: f64,
    /// Gauss panel width, relative to the length of the range, in the
    /// integrals `I₀` and `I` of `K₂`; the cost grows like its inverse.
    pub primitive_width: f64,
}

impl Default for K2Evaluator {
    fn default() -> Self {
        Self { series_terms: 20_000, integral_span: 2_000.0, quadrature_extent: 1e4, primitive_width: 1e-3 }
    }
}

/// `K₂(x, y)` by the closed route with default truncations.
pub fn k2_closed(x: f64, y: f64) -> Result<f64> {
    K2Evaluator::default().closed(x, y)
}

/// `K₂(x, y)` by direct quadrature with default truncations.
pub fn k2_quadrature(x: f64, y: f64) -> Result<f64> {
    K2Evaluator::default().quadrature(x, y)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        domain(format!("{name} = {v} must lie in [0, 1]"))
    }
}

fn check_positive_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        domain(format!("{name} = {v} must lie in (0, 1]"))
    }
}

impl K2Evaluator {
    /// `K₂(x, y)` from the four-term Bernoulli representation.
    pub fn closed(&self, x: f64, y: f64) -> Result<f64> {
        check_positive_unit("x", x)?;
        check_positive_unit("y", y)?;
        Ok(self.closed_unchecked(x, y))
    }

    pub(crate) fn closed_unchecked(&self, x: f64, y: f64) -> f64 {
        // K₂ is symmetric; x ≤ y keeps the breakpoint count of the mixed
        // integral near the span and the series ratio y/x ≥ 1.
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        let inv_x = 1.0 / x;
        let inv_y = 1.0 / y;

        let product = -0.5 * x * b2(inv_x) * b1(inv_y);
        let mixed = self.mixed_integral(x, y) / x;
        let pure = -sawtooth_tail(2, 2.0, inv_x) / (2.0 * y);

        let alpha = y / x;
        let m_first = inv_y.floor() as u64 + 1;
        let m_last = inv_y.ceil() as u64 + self.series_terms.max((20.0 * inv_y) as u64);
        let mut series = 0.0;
        for m in (m_first..=m_last).rev() {
            let mf = m as f64;
            series += b2(mf * alpha) / (mf * mf);
        }
        series += b2_series_tail(alpha, m_last as f64);
        product + mixed + pure + x / (2.0 * y * y) * series
    }

    /// `∫_{1/x}^∞ B̃₂(t) B̃₁(xt/y) t⁻³ dt` for `x ≤ y`.
    fn mixed_integral(&self, x: f64, y: f64) -> f64 {
        let r = x / y;
        let period = y / x;
        let start = 1.0 / x;
        let end = start + self.integral_span;
        let low = gauss_legendre(4).expect("valid order");
        let high = gauss_legendre(10).expect("valid order");
        let mut t = start;
        let mut next_int = t.floor() + 1.0;
        let mut j = (t / period).floor() + 1.0;
        let mut next_mult = j * period;
        let mut total = 0.0;
        while t < end {
            let hi = next_int.min(next_mult).min(end);
            if hi - t > 1e-13 * t {
                // On (t, hi) both factors are polynomials: local variables
                // avoid repeated floor() calls and keep full precision.
                let n = t.floor();
                let k = (0.5 * (t + hi) * r).floor();
                let f = |s: f64| {
                    let u = s - n;
                    let v = s * r - k;
                    (u * (u - 1.0) + 1.0 / 6.0) * (v - 0.5) / (s * s * s)
                };
                let rule = if (hi - t) / t < 0.02 { low } else { high };
                total += rule.integrate(t, hi, f);
            }
            t = hi;
            if next_int <= t {
                next_int += 1.0;
            }
            if next_mult <= t {
                j += 1.0;
                next_mult = j * period;
            }
        }
        total + b2b1_tail(r, end)
    }

    /// `K₂(x, y)` by direct quadrature of its definition; `0` if `xy = 0`.
    pub fn quadrature(&self, x: f64, y: f64) -> Result<f64> {
        check_unit("x", x)?;
        check_unit("y", y)?;
        if x == 0.0 || y == 0.0 {
            return Ok(0.0);
        }
        Ok(self.quadrature_unchecked(x, y))
    }

    fn quadrature_unchecked(&self, x: f64, y: f64) -> f64 {
        let extent = self.quadrature_extent;
        let rule = gauss_legendre(3).expect("valid order");
        let mut u = 1.0;
        let mut i = (1.0 / x).floor() + 1.0;
        let mut j = (1.0 / y).floor() + 1.0;
        let mut total = 0.0;
        while u < extent {
            let (nx, ny) = (i * x, j * y);
            let hi = nx.min(ny).min(extent);
            let len = hi - u;
            if len > 1e-13 * u {
                // B̃₁(s/x) = s/x − (i−1) − ½ on (u, hi), likewise for y.
                let ax = -(i - 1.0) - 0.5;
                let ay = -(j - 1.0) - 0.5;
                if len / u > 0.05 {
                    let c0 = ax * ay;
                    let c1 = ax / y + ay / x;
                    let c2 = 1.0 / (x * y);
                    total += c0 * (1.0 / u - 1.0 / hi) + c1 * (hi / u).ln() + c2 * len;
                } else {
                    total += rule.integrate(u, hi, |s| {
                        (s / x + ax) * (s / y + ay) / (s * s)
                    });
                }
            }
            u = hi;
            if nx <= u {
                i += 1.0;
            }
            if ny <= u {
                j += 1.0;
            }
        }
        total + sawtooth_product_tail(x, y, extent)
    }

    /// `I₀(x, y) = ∫₀ˣ K₂(z, y) dz`.
    ///
    /// Geometric panels `[x·2⁻ᵏ⁻¹, x·2⁻ᵏ]`, `k = 0..30`, split where
    /// `z ↦ K₂(z, y)` has derivative jumps (`z = 1/(ky)`); below `x·2⁻³¹`
    /// the integrand is `O(z/y)` and the remainder is negligible.
    pub fn i0(&self, x: f64, y: f64) -> Result<f64> {
        check_positive_unit("x", x)?;
        check_positive_unit("y", y)?;
        let mut total = 0.0;
        for k in 0..=30 {
            let hi = x * 0.5f64.powi(k);
            let lo = 0.5 * hi;
            total += self.integrate_in_z(lo, hi, y, self.primitive_width * x, |_| 1.0);
        }
        Ok(total)
    }

    /// `I(x, y; w) = ∫ₓ^y K₂(z, w) z⁻² dz` (signed).
    pub fn i(&self, x: f64, y: f64, w: f64) -> Result<f64> {
        check_positive_unit("x", x)?;
        check_positive_unit("y", y)?;
        check_positive_unit("w", w)?;
        if x == y {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if x < y { (x, y, 1.0) } else { (y, x, -1.0) };
        let mut total = 0.0;
        let mut b = hi;
        while b > lo {
            let a = (0.5 * b).max(lo);
            total += self.integrate_in_z(a, b, w, self.primitive_width * (hi - lo), |z| 1.0 / (z * z));
            b = a;
        }
        Ok(sign * total)
    }

    /// `∫_a^b K₂(z, y) g(z) dz`.
    ///
    /// `z ↦ K₂(z, y)` has derivative jumps at `z = 1/(ky)` and sharp ridges
    /// along the rays `z = y·k/m` for every `k/m`, so no panel layout makes
    /// it smooth: `[a, b]` is split at the jumps (when there are few) and at
    /// the rays with `k, m ≤ 6`, and then covered by many narrow low-order
    /// panels. The error decays roughly like `width^1.7`.
    fn integrate_in_z(&self, a: f64, b: f64, y: f64, width: f64, g: impl Fn(f64) -> f64) -> f64 {
        const RAY_DEN: u64 = 6;
        let k_lo = (1.0 / (b * y)).ceil();
        let k_hi = (1.0 / (a * y)).floor();
        let mut pts = vec![a, b];
        if k_hi - k_lo < 16.0 {
            let mut k = k_hi;
            while k >= k_lo {
                pts.push(1.0 / (k * y));
                k -= 1.0;
            }
        }
        for k in 1..=RAY_DEN {
            for m in 1..=RAY_DEN {
                if gcd(k, m) == 1 {
                    pts.push(y * k as f64 / m as f64);
                }
            }
        }
        pts.retain(|z| *z >= a && *z <= b);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|p, q| *p - *q <= 1e-15 * b);
        let f = |z: f64| self.closed_unchecked(z, y) * g(z);
        pts.windows(2).map(|w| composite(&f, w[0], w[1], width)).sum()
    }
}

/// `∫_a^b f` on equal 4-point Gauss panels no wider than `width`.
fn composite(f: &impl Fn(f64) -> f64, a: f64, b: f64, width: f64) -> f64 {
    let rule = gauss_legendre(4).expect("valid order");
    let n = ((b - a) / width).ceil().max(1.0);
    let h = (b - a) / n;
    (0..n as usize).map(|i| rule.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, f)).sum()
}

/// The exact diagonal
/// `K₂(x, x) = K(1, x)² + [⌊1/x⌋ log(1/x) − 1/x + log√(2π/x) − log(⌊1/x⌋!)] / (x/2)`.
pub fn k2_diag_exact(x: f64) -> Result<f64> {
    check_positive_unit("x", x)?;
    let inv = 1.0 / x;
    let n = inv.floor();
    let k1 = kernel(1.0, x);
    let bracket = n * inv.ln() - inv + 0.5 * (std::f64::consts::TAU * inv).ln()
        - log_factorial(n as u64);
    Ok(k1 * k1 + bracket / (0.5 * x))
}

/// `∫ₓ¹ |Σ_{m>1/y} B̃₂(my/x)/m²| dy/y²`, the integral whose bound `< 2/3`
/// controls the series term of the closed form.
///
/// The series is summed to `m = 4000` with its resonant tail added back;
/// the `y`-integral uses 2000 four-point Gauss panels (the integrand is only
/// piecewise smooth, so the result is good to a few digits, ample for a
/// bound check).
pub fn series_term_integral(x: f64) -> Result<f64> {
    check_positive_unit("x", x)?;
    const TERMS: u64 = 4000;
    const PANELS: usize = 2000;
    let rule = gauss_legendre(4)?;
    let series = |y: f64| -> f64 {
        let alpha = y / x;
        let first = (1.0 / y).floor() as u64 + 1;
        let last = TERMS.max(first);
        let head: f64 = (first..=last).rev().map(|m| b2(m as f64 * alpha) / (m * m) as f64).sum();
        head + b2_series_tail(alpha, last as f64)
    };
    let h = (1.0 - x) / PANELS as f64;
    Ok((0..PANELS)
        .map(|k| {
            let a = x + k as f64 * h;
            rule.integrate(a, a + h, |y| series(y).abs() / (y * y))
        })
        .sum())
}

/// `∫₀¹ K₂(x, x) dx` from [`k2_diag_exact`]: Gauss panels between the kinks
/// at `x = 1/n`, `n ≤ 4000`, and `K₂(x, x) ≈ 1/12` below (error `O(x²)`).
pub fn diag_integral() -> f64 {
    const LAST: u64 = 4000;
    let rule = gauss_legendre(10).expect("valid order");
    let body: f64 = (1..LAST)
        .rev()
        .map(|n| {
            let (a, b) = (1.0 / (n + 1) as f64, 1.0 / n as f64);
            rule.integrate(a, b, |x| k2_diag_exact(x).expect("x in (0, 1]"))
        })
        .sum();
    body + 1.0 / (12.0 * LAST as f64)
}

/// `I₀(x, y) = ∫₀ˣ K₂(z, y) dz` with default truncations.
pub fn i0_eval(x: f64, y: f64) -> Result<f64> {
    K2Evaluator::default().i0(x, y)
}

/// `I(x, y; w) = ∫ₓ^y K₂(z, w) z⁻² dz` with default truncations.
pub fn i_eval(x: f64, y: f64, w: f64) -> Result<f64> {
    K2Evaluator::default().i(x, y, w)
}
