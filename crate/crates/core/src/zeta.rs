//! Connections between the kernel and the Riemann zeta function: the
//! Euler–Maclaurin remainder identity, the partial-sum formula for ζ, a
//! Stirling-type limit, the Laplace transform of `h`, and the log-domain
//! (Hankel) form of the kernel action.
//!
//! Every residual pairs a breakpoint-aware quadrature of a kernel integral
//! with a closed form built from [`zeta`], harmonic-type partial sums and
//! log-factorials.

use crate::bernoulli::{log_factorial, sawtooth_tail, BERNOULLI_NUMBERS};
use crate::error::{domain, Error, Result};
use crate::kernel::{h, kernel};
use crate::quadrature::{gauss_legendre, integrate_panels, kernel_breakpoints};

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Truncation of the `v`-integral in [`hankel_apply`].
pub const HANKEL_CUTOFF: f64 = 40.0;

/// Number of reciprocal breakpoints resolved explicitly by the kernel
/// quadratures; the remaining oscillatory tail is summed in closed form.
const BREAKPOINTS: u64 = 4096;
/// Breakpoints resolved by the Hankel and x-domain actions.
const ACTION_BREAKPOINTS: u64 = 1 << 16;
/// Gauss order on each breakpoint panel.
const PANEL_ORDER: usize = 16;
/// Gauss order for the (many, short) panels of the Stirling integral.
const STIRLING_ORDER: usize = 6;
/// Upper summation index of the explicit part of the Euler–Maclaurin series.
const EM_TERMS: u64 = 20_000;

/// Euler–Maclaurin evaluation of ζ on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZetaEvaluator {
    /// Terms summed directly before the Euler–Maclaurin tail.
    pub truncation: u64,
    /// Number of Bernoulli corrections `B₂ₖ` in the tail (at most 10).
    pub depth: usize,
}

impl Default for ZetaEvaluator {
    fn default() -> Self {
        Self { truncation: 20, depth: 8 }
    }
}

impl ZetaEvaluator {
    /// `ζ(s)` for real `s > −1`, `s ≠ 1`.
    pub fn zeta(&self, s: f64) -> Result<f64> {
        if s == 1.0 {
            return Err(Error::Pole(1.0));
        }
        if !(s > -1.0) || !s.is_finite() {
            return domain(format!("zeta is evaluated for real s > -1, got {s}"));
        }
        let n = self.truncation.max(1) as f64;
        let head: f64 = (1..self.truncation.max(1)).rev().map(|k| (k as f64).powf(-s)).sum();
        let mut total = head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
        // term_k = s(s+1)…(s+2k−2)/(2k)! · N^{−s−2k+1}
        let mut term = 0.5 * s * n.powf(-s - 1.0);
        for k in 1..=self.depth.min(10) {
            total += BERNOULLI_NUMBERS[2 * k] * term;
            let kf = k as f64;
            term *= (s + 2.0 * kf - 1.0) * (s + 2.0 * kf) / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0) * n * n);
        }
        Ok(total)
    }
}

/// `ζ(s)` with the default evaluator.
pub fn zeta(s: f64) -> Result<f64> {
    ZetaEvaluator::default().zeta(s)
}

/// `Σ_{n ≤ 1/x} n^{−σ}`.
fn reciprocal_power_sum(sigma: f64, x: f64) -> f64 {
    let top = (1.0 / x).floor() as u64;
    (1..=top).rev().map(|n| (n as f64).powf(-sigma)).sum()
}

fn check_unit(x: f64) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return domain(format!("x must lie in (0, 1], got {x}"));
    }
    Ok(())
}

/// `∫₀¹ K(x, y) yˢ dy` for `s > −1` by Gauss panels between the jumps
/// `y = 1/(nx)`, `n ≤ 4096`; below the last jump the substitution
/// `u = 1/(xy)` turns the rest into `−x^{−s−1} ∫_N^∞ B̃₁(u) u^{−s−2} du`.
pub fn kernel_moment(x: f64, s: f64) -> Result<f64> {
    check_unit(x)?;
    if !(s > -1.0) {
        return domain(format!("moment order must exceed -1, got {s}"));
    }
    let n = BREAKPOINTS.max((1.0 / x).ceil() as u64);
    let cutoff = 1.0 / (n as f64 * x);
    let pts = kernel_breakpoints(x, cutoff);
    let body = integrate_panels(&pts, PANEL_ORDER, |y| kernel(x, y) * y.powf(s));
    let tail = -x.powf(-s - 1.0) * sawtooth_tail(1, s + 2.0, n as f64);
    Ok(body + tail)
}

/// Residual of the partial-sum formula for ζ:
/// `(s+1)x^{s+1}∫₀¹K(x,y)yˢdy` against
/// `ζ(s+1) − Σ_{n≤1/x} n^{−(s+1)} − xˢ/s + x^{s+1}K(1,x)`.
pub fn zeta_connect_residual(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) {
        return domain(format!("zeta connection needs s > 0, got {s}"));
    }
    check_unit(x)?;
    let lhs = (s + 1.0) * x.powf(s + 1.0) * kernel_moment(x, s)?;
    let rhs = zeta(s + 1.0)? - reciprocal_power_sum(s + 1.0, x) - x.powf(s) / s + x.powf(s + 1.0) * kernel(1.0, x);
    Ok((lhs - rhs).abs())
}

/// The `s → 0⁺` limit of [`zeta_connect_residual`]:
/// `x∫₀¹K(x,y)dy` against `γ − Σ_{n≤1/x} 1/n + log(1/x) + xK(1,x)`.
pub fn euler_limit_residual(x: f64) -> Result<f64> {
    check_unit(x)?;
    let lhs = x * kernel_moment(x, 0.0)?;
    let rhs = EULER_GAMMA - reciprocal_power_sum(1.0, x) - x.ln() + x * kernel(1.0, x);
    Ok((lhs - rhs).abs())
}

/// `log(⌊1/x⌋!) − ⌊1/x⌋ log(1/x) + 1/x − log √(2π/x)`.
pub fn stirling_rhs(x: f64) -> Result<f64> {
    check_unit(x)?;
    let r = 1.0 / x;
    let n = r.floor();
    Ok(log_factorial(n as u64) - n * r.ln() + r - 0.5 * (std::f64::consts::TAU * r).ln())
}

/// `∫_{ε'}^1 K(x,y) dy/y`, where `ε' = 1/(Nx) ≤ ε` is the largest jump of
/// `K(x, ·)` not above `ε`.
///
/// Snapping the cutoff to a jump makes the truncation error
/// `∫_N^∞ B̃₁(u) du/u = 1/(12N) + O(N⁻³)` smooth in `N`.
fn stirling_integral(x: f64, eps: f64) -> (f64, u64) {
    let n = (1.0 / (eps * x)).ceil().max((1.0 / x).ceil()) as u64;
    let cutoff = 1.0 / (n as f64 * x);
    let pts = kernel_breakpoints(x, cutoff);
    // The few wide panels near y = 1 get the high-order rule.
    let split = pts.len().saturating_sub(65);
    let f = |y: f64| kernel(x, y) / y;
    let near_zero = integrate_panels(&pts[..=split], STIRLING_ORDER, f);
    (near_zero + integrate_panels(&pts[split..], PANEL_ORDER, f), n)
}

fn check_stirling(x: f64, eps: f64) -> Result<()> {
    check_unit(x)?;
    if !(eps > 0.0 && eps < x) {
        return domain(format!("cutoff must satisfy 0 < eps < x, got eps = {eps}, x = {x}"));
    }
    Ok(())
}

/// `|∫_ε¹ K(x,y) dy/y − RHS|` with [`stirling_rhs`] on the right and the
/// cutoff snapped down to the nearest jump of `K(x, ·)`.
pub fn stirling_alt_residual(x: f64, eps: f64) -> Result<f64> {
    check_stirling(x, eps)?;
    let (integral, _) = stirling_integral(x, eps);
    Ok((integral - stirling_rhs(x)?).abs())
}

/// As [`stirling_alt_residual`], with one Richardson step in the cutoff
/// (`2I(ε/2) − I(ε)`) removing the `1/(12N)` truncation term.
pub fn stirling_alt_extrapolated(x: f64, eps: f64) -> Result<f64> {
    check_stirling(x, eps)?;
    let (coarse, n) = stirling_integral(x, eps);
    let fine_eps = 1.0 / (2.0 * n as f64 * x);
    let (fine, _) = stirling_integral(x, fine_eps);
    Ok((2.0 * fine - coarse - stirling_rhs(x)?).abs())
}

/// `|∫₀¹K(1,y)y^{s−1}dy − (ζ(s) − 1/(s−1) − ½)/s|`, the integral taken in
/// the log variable as `∫₀^∞ h(v)e^{−(s−½)v}dv` with panels between the
/// jumps `v = log n`.
pub fn laplace_h_residual(s: f64) -> Result<f64> {
    if s == 1.0 {
        return Err(Error::Pole(1.0));
    }
    if !(s > 0.0) {
        return domain(format!("Laplace identity needs s > 0, got {s}"));
    }
    let rule = gauss_legendre(PANEL_ORDER)?;
    let mut body = 0.0;
    for n in (1..BREAKPOINTS).rev() {
        let (lo, hi) = ((n as f64).ln(), ((n + 1) as f64).ln());
        body += rule.integrate(lo, hi, |v| h(v) * (-(s - 0.5) * v).exp());
    }
    let tail = -sawtooth_tail(1, s + 1.0, BREAKPOINTS as f64);
    let rhs = (zeta(s)? - 1.0 / (s - 1.0) - 0.5) / s;
    Ok((body + tail - rhs).abs())
}

/// Residual of the Euler–Maclaurin form of the kernel action for `f(y) = yˢ`,
/// `F(z) = z^{s+1}/(s+1)`:
///
/// ```text
/// ∫₀¹K(x,y)f(y)dy = Σ_{n>1/x} F(1/(nx)) − ∫_{1/x}^∞ F(1/(νx))dν + K(1,x)F(1).
/// ```
///
/// The series and the integral are paired up to `n = 20000` (each diverges
/// alone when `s = 0`); beyond that their difference is the Euler–Maclaurin
/// remainder of a smooth power, added in closed form.
pub fn em_identity_residual(s: f64, x: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return domain(format!("exponent must be nonnegative, got {s}"));
    }
    check_unit(x)?;
    let c = x.powf(-s - 1.0) / (s + 1.0);
    let g = |u: f64| c * u.powf(-s - 1.0);
    let first = (1.0 / x).floor() as u64 + 1;
    let m = EM_TERMS.max(first);
    let series: f64 = (first..=m).rev().map(|n| g(n as f64)).sum();
    let mf = m as f64;
    let integral = if s == 0.0 {
        (mf * x).ln() / x
    } else {
        x.powf(-s - 1.0) * (x.powf(s) - mf.powf(-s)) / (s * (s + 1.0))
    };
    // Σ_{n>M} G(n) − ∫_M^∞ G = −G(M)/2 − Σ_k B₂ₖ/(2k)! G^{(2k−1)}(M).
    let d1 = -(s + 1.0) * c * mf.powf(-s - 2.0);
    let d3 = -(s + 1.0) * (s + 2.0) * (s + 3.0) * c * mf.powf(-s - 4.0);
    let remainder = -0.5 * g(mf) - d1 / 12.0 + d3 / 720.0;
    let rhs = series - integral + remainder + kernel(1.0, x) / (s + 1.0);
    Ok((kernel_moment(x, s)? - rhs).abs())
}

/// Log-domain action `G(u) = ∫₀^V h(u+v)F(v)dv`, `V = 40`.
///
/// Panels run between the jumps `v = log n − u` for `n ≤ 2¹⁶`; past the last
/// one, `w = e^{u+v}` turns the remaining integral into
/// `−∫ B̃₁(w) w^{−3/2} F(log w − u) dw`, whose leading term
/// `B̃₂(w₀)g(w₀)/2` is added.
pub fn hankel_apply(f: impl Fn(f64) -> f64, u: f64) -> Result<f64> {
    if !(u >= 0.0) || !u.is_finite() {
        return domain(format!("u must be finite and nonnegative, got {u}"));
    }
    let rule = gauss_legendre(PANEL_ORDER)?;
    let v_end = HANKEL_CUTOFF;
    let mut pts = vec![0.0];
    let first = u.exp().floor() as u64 + 1;
    let mut last_w = u.exp();
    let mut reached_cutoff = false;
    for n in first..=ACTION_BREAKPOINTS {
        let v = (n as f64).ln() - u;
        if v >= v_end {
            reached_cutoff = true;
            break;
        }
        pts.push(v);
        last_w = n as f64;
    }
    let v_last = *pts.last().expect("nonempty");
    let mut total = 0.0;
    for w in pts.windows(2).rev() {
        total += rule.integrate(w[0], w[1], |v| h(u + v) * f(v));
    }
    if reached_cutoff {
        // The cutoff V falls before the next jump: finish the last piece.
        total += rule.integrate(v_last, v_end, |v| h(u + v) * f(v));
    } else {
        let b2 = crate::bernoulli::b2(last_w);
        total += 0.5 * b2 * last_w.powf(-1.5) * f(v_last);
    }
    Ok(total)
}

/// x-domain action `√x ∫₀¹ K(x,y) f(y) dy` at `x = e^{−u}`, the dual of
/// [`hankel_apply`] for `F(v) = e^{−v/2} f(e^{−v})`.
pub fn hankel_via_x(f: impl Fn(f64) -> f64, u: f64) -> Result<f64> {
    if !(u >= 0.0) || !u.is_finite() {
        return domain(format!("u must be finite and nonnegative, got {u}"));
    }
    let x = (-u).exp();
    let n = ACTION_BREAKPOINTS.max((1.0 / x).ceil() as u64);
    let cutoff = 1.0 / (n as f64 * x);
    let pts = kernel_breakpoints(x, cutoff);
    let body = integrate_panels(&pts, PANEL_ORDER, |y| kernel(x, y) * f(y));
    // ∫₀^c K(x,y)f(y)dy = −∫_N^∞ B̃₁(w) f(1/(xw))/(xw²) dw ≈ g(N)/12.
    let nf = n as f64;
    let tail = f(cutoff) / (12.0 * x * nf * nf);
    Ok(x.sqrt() * (body + tail))
}

/// `∥h(u + ·)∥₂ ≤ ½e^{−u/2}`, so `|G(u)| ≤ ½e^{−u/2}∥F∥₂`.
pub fn hankel_tail_bound(u: f64, f_norm: f64) -> f64 {
    0.5 * (-0.5 * u).exp() * f_norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_special_values() {
        assert!((zeta(2.0).unwrap() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert_eq!(zeta(0.0).unwrap(), -0.5);
        assert!(matches!(zeta(1.0), Err(Error::Pole(_))));
        assert!(zeta(-1.5).is_err());
    }

    #[test]
    fn euler_maclaurin_and_partial_sum_forms_agree() {
        for &(s, x) in &[(1.0, 0.3), (0.5, 0.7), (2.0, 0.45)] {
            let a = em_identity_residual(s, x).unwrap();
            let b = zeta_connect_residual(s, x).unwrap();
            assert!(a < 1e-10 && b < 1e-10, "{s} {x}: {a:e} {b:e}");
        }
    }
}
