//! Point evaluation of the kernel, its log-domain form `h`, and the
//! row-difference functional `Δ_r`.

use crate::bernoulli::{fract, log_factorial};
use crate::error::{domain, Result};
use crate::quadrature::{gauss_legendre, kernel_breakpoints, merge_sorted};

/// `K(x, y) = ½ − {1/(xy)}` for `xy > 0`, `0` when `xy = 0`.
///
/// No range checks; see [`k_eval`] for the checked version.
#[inline]
pub fn kernel(x: f64, y: f64) -> f64 {
    let t = x * y;
    if t == 0.0 {
        0.0
    } else {
        0.5 - fract(1.0 / t)
    }
}

/// `K(x, y)` for `x, y ∈ [0, 1]`.
pub fn k_eval(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return domain(format!("K({x}, {y}) is only defined on [0,1]^2"));
    }
    Ok(kernel(x, y))
}

/// `h(v) = e^{−v/2} K(1, e^{−v})` for `v ≥ 0`.
pub fn h_eval(v: f64) -> Result<f64> {
    if !(v >= 0.0) || !v.is_finite() {
        return domain(format!("h(v) needs finite v >= 0, got {v}"));
    }
    Ok(h(v))
}

#[inline]
pub(crate) fn h(v: f64) -> f64 {
    // v = log n round-trips through exp only to within an ulp or two; snap
    // those values so that K(1, 1/n) = ½ as at the exact integer.
    let e = v.exp();
    let fr = if (e - e.round()).abs() <= 4.0 * f64::EPSILON * e { 0.0 } else { fract(e) };
    (-0.5 * v).exp() * (0.5 - fr)
}

/// Configuration for the quadratures behind [`delta_r`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelModel {
    /// Accuracy target for `Δ_r`: the cut-off below `z₀` is exact to it, the
    /// oscillatory range just above `z₀` typically to ~1e-8.
    pub tolerance: f64,
    /// Upper limit on breakpoint panels before switching to bisection.
    pub max_panels: usize,
}

impl Default for KernelModel {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_panels: 100_000 }
    }
}

/// `Δ_r(a, b) = ∫₀¹ |K(a, z) − K(b, z)| z^r dz` with the default model.
pub fn delta_r(a: f64, b: f64, r: f64) -> Result<f64> {
    KernelModel::default().delta_r(a, b, r)
}

impl KernelModel {
    /// `Δ_r(a, b)`; see [`delta_r`].
    ///
    /// Panels are split wherever `1/(az)` or `1/(bz)` is an integer and at
    /// the sign change of the (then smooth) difference. Below
    /// `z₀ = ((r+1)·tol)^{1/(r+1)}` the integrand is at most `z^r`, so the
    /// omitted part is at most `z₀^{r+1}/(r+1) = tol`.
    pub fn delta_r(&self, a: f64, b: f64, r: f64) -> Result<f64> {
        if !(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0) {
            return domain(format!("delta_r needs a, b in (0,1], got ({a}, {b})"));
        }
        if !(r > -1.0) {
            return domain(format!("delta_r needs r > -1, got {r}"));
        }
        if a == b {
            return Ok(0.0);
        }
        let z0 = ((r + 1.0) * self.tolerance).powf(1.0 / (r + 1.0)).min(0.5);
        let density = 1.0 / a + 1.0 / b;
        let z_cap = (density / self.max_panels as f64).max(z0);
        let pts = merge_sorted(&kernel_breakpoints(a, z_cap), &kernel_breakpoints(b, z_cap), 0.0);
        let rule = gauss_legendre(6)?;
        let f = |z: f64| (kernel(a, z) - kernel(b, z)).abs() * z.powf(r);
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            // On (lo, hi) the difference is (k_a − k_b) − (1/a − 1/b)/z.
            let mid = 0.5 * (lo + hi);
            let c = (1.0 / (a * mid)).floor() - (1.0 / (b * mid)).floor();
            let d = 1.0 / a - 1.0 / b;
            let root = if c != 0.0 { d / c } else { f64::NAN };
            if root > lo && root < hi {
                total += rule.integrate(lo, root, f) + rule.integrate(root, hi, f);
            } else {
                total += rule.integrate(lo, hi, f);
            }
        }
        if z_cap > z0 {
            total += adaptive(&f, z0, z_cap, self.tolerance, 200_000);
        }
        Ok(total)
    }
}

/// Adaptive bisection with a 5-point Gauss rule and an evaluation budget.
pub(crate) fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, budget: usize) -> f64 {
    let rule = gauss_legendre(5).expect("valid order");
    let mut stack = vec![(a, b, rule.integrate(a, b, f), tol)];
    let mut total = 0.0;
    let mut evals = 5usize;
    while let Some((lo, hi, whole, t)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, f);
        let right = rule.integrate(mid, hi, f);
        evals += 10;
        if (left + right - whole).abs() <= t || evals > budget || hi - lo < 1e-15 * hi.max(1e-300) {
            total += left + right;
        } else {
            stack.push((lo, mid, left, 0.5 * t));
            stack.push((mid, hi, right, 0.5 * t));
        }
    }
    total
}

/// `∥K∥²_HS = ∫∫ K² = ∫₀¹ (½ − {1/t})² log(1/t) dt`, since `xy` has
/// density `log(1/t)` on `[0, 1]`.
///
/// With `u = 1/t` the integrand is `B̃₁(u)² log(u)/u²`; unit panels are
/// integrated up to `u = 10⁴`, and beyond that `B̃₁² = 1/12 + B̃₂` gives the
/// tail in closed form up to `O(log U / U³)` terms, which are included.
pub fn hs_norm_squared() -> f64 {
    static VALUE: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *VALUE.get_or_init(|| {
        const U: usize = 10_000;
        let rule = gauss_legendre(8).expect("valid order");
        let mut total = 0.0;
        for k in (1..U).rev() {
            let kf = k as f64;
            total += rule.integrate(kf, kf + 1.0, |u| {
                let b = u - kf - 0.5;
                b * b * u.ln() / (u * u)
            });
        }
        let u = U as f64;
        let mean = ((u).ln() + 1.0) / (12.0 * u);
        let oscillation = -(1.0 - 2.0 * u.ln()) / (360.0 * u * u * u);
        total + mean + oscillation
    })
}

/// `∫₀¹ K(x, y) dy/y = log(⌊1/x⌋!) − ⌊1/x⌋ log(1/x) + 1/x − ½ log(2π/x)`
/// for `x ∈ (0, 1]` (an improper Riemann integral).
///
/// For large `⌊1/x⌋` the Stirling series is folded in analytically to avoid
/// cancellation between the factorial and the logarithms.
pub fn inverse_moment(x: f64) -> f64 {
    let r = 1.0 / x;
    let n = r.floor();
    if n < 20.0 {
        return log_factorial(n as u64) - n * r.ln() + r - 0.5 * (2.0 * std::f64::consts::PI * r).ln();
    }
    let f = r - n;
    let n2 = n * n;
    f - (n + 0.5) * (f / n).ln_1p() + 1.0 / (12.0 * n) - 1.0 / (360.0 * n * n2) + 1.0 / (1260.0 * n * n2 * n2)
}
