//! Piecewise polynomials on panel partitions of `[0, 1]` and the
//! "sum minus integral" transform that applies the kernel to them.
//!
//! For a piecewise polynomial `G` and `s ∈ {0, 1}` define
//!
//! ```text
//! D_s[G](x) = Σ_{n > 1/x} G(1/(nx)) n^{−s} − ∫_{1/x}^∞ G(1/(νx)) ν^{−s} dν .
//! ```
//!
//! Integrating by parts against the jumps of `y ↦ K(x, y)` gives
//! `∫₀¹ K(x, y) g(y) dy = D₀[∫g](x) + (∫₀¹g)·K(x, 1)` and
//! `d/dx ∫₀¹ K(x, y) g(y) dy = −D₁[g](x)/x²`, so `D_s` is how the smooth
//! eigenfunction interpolant and its derivative are evaluated.
//!
//! On panel `p = [b_p, b_{p+1}]` the contributing `n` form the window
//! `(1/(b_{p+1}x), 1/(b_p x)]`. Short windows are summed directly; long ones
//! use Euler–Maclaurin, in which the integral cancels and only endpoint
//! terms remain. On the first panel `[0, b₁]`, `G` is a polynomial in `z`
//! and each monomial reduces to a Hurwitz-zeta-type constant.

use crate::bernoulli::{b1, b2, b3, b4, BERNOULLI_NUMBERS};
use crate::quadrature::gauss_legendre;

/// Windows with more integers than this use Euler–Maclaurin.
const DIRECT_SUM_LIMIT: f64 = 48.0;

/// A piecewise polynomial stored as monomials in the local variable
/// `τ ∈ [−1, 1]` of each panel.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PiecewisePoly {
    bounds: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    /// Interpolate `values` given at the mapped points `local` (in `[−1, 1]`)
    /// of every panel of `bounds`, panel by panel.
    pub(crate) fn from_nodal(bounds: &[f64], local: &[f64], values: &[f64]) -> Self {
        let q = local.len();
        let coeffs = values.chunks(q).map(|v| newton_to_monomial(local, v)).collect();
        Self { bounds: bounds.to_vec(), coeffs }
    }

    pub(crate) fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub(crate) fn panel_count(&self) -> usize {
        self.coeffs.len()
    }

    /// Index of the panel containing `z` (right-closed on the last panel).
    #[cfg(test)]
    pub(crate) fn panel_of(&self, z: f64) -> usize {
        let p = self.bounds.partition_point(|b| *b <= z);
        p.clamp(1, self.bounds.len() - 1) - 1
    }

    #[inline]
    fn local(&self, p: usize, z: f64) -> f64 {
        let (a, b) = (self.bounds[p], self.bounds[p + 1]);
        (2.0 * z - a - b) / (b - a)
    }

    /// Value of panel `p`'s polynomial at `z` (extrapolating if outside).
    #[inline]
    pub(crate) fn eval_in(&self, p: usize, z: f64) -> f64 {
        horner(&self.coeffs[p], self.local(p, z))
    }

    #[cfg(test)]
    pub(crate) fn eval(&self, z: f64) -> f64 {
        self.eval_in(self.panel_of(z), z)
    }

    /// `G, G′, G″, G‴` (derivatives in `z`) of panel `p` at `τ = ±1`.
    fn end_jet(&self, p: usize, tau: f64) -> [f64; 4] {
        let c = &self.coeffs[p];
        let scale = 2.0 / (self.bounds[p + 1] - self.bounds[p]);
        let mut out = [0.0; 4];
        let mut factor = 1.0;
        for (order, slot) in out.iter_mut().enumerate() {
            // order-th derivative of Σ c_k τ^k at τ
            let mut v = 0.0;
            for k in (order..c.len()).rev() {
                let falling: f64 = (0..order).map(|i| (k - i) as f64).product();
                v += c[k] * falling * tau.powi((k - order) as i32);
            }
            *slot = v * factor;
            factor *= scale;
        }
        out
    }

    /// The continuous antiderivative vanishing at the left end of the first
    /// panel.
    pub(crate) fn antiderivative(&self) -> Self {
        let mut acc = 0.0;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| {
                let half = 0.5 * (self.bounds[p + 1] - self.bounds[p]);
                let mut d = vec![0.0; c.len() + 1];
                let mut at_minus_one = 0.0;
                for (k, ck) in c.iter().enumerate() {
                    d[k + 1] = ck * half / (k + 1) as f64;
                    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                    at_minus_one += d[k + 1] * sign;
                }
                d[0] = acc - at_minus_one;
                acc = horner(&d, 1.0);
                d
            })
            .collect();
        Self { bounds: self.bounds.clone(), coeffs }
    }

    /// `c·G`.
    pub(crate) fn scaled(&self, c: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|v| v.iter().map(|a| c * a).collect()).collect();
        Self { bounds: self.bounds.clone(), coeffs }
    }

    /// Value at the right end of the last panel.
    pub(crate) fn right_end(&self) -> f64 {
        horner(self.coeffs.last().expect("at least one panel"), 1.0)
    }

    /// `∫_{b_p}^{b_{p+1}} G(z) w(z) dz` by a 24-point Gauss rule.
    fn weighted_integral(&self, p: usize, w: impl Fn(f64) -> f64) -> f64 {
        let rule = gauss_legendre(24).expect("valid order");
        rule.integrate(self.bounds[p], self.bounds[p + 1], |z| self.eval_in(p, z) * w(z))
    }

    /// First-panel polynomial as monomials in `z` itself.
    fn first_panel_in_z(&self) -> Vec<f64> {
        // τ = 2z/b₁ − 1
        let b = self.bounds[1] - self.bounds[0];
        let c = &self.coeffs[0];
        let mut out = vec![0.0; c.len()];
        for (k, ck) in c.iter().enumerate() {
            // (2z/b − 1)^k = Σ_i C(k,i) (2/b)^i z^i (−1)^{k−i}
            let mut binom = 1.0;
            for i in 0..=k {
                let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
                out[i] += ck * binom * sign * (2.0 / b).powi(i as i32);
                binom = binom * (k - i) as f64 / (i + 1) as f64;
            }
        }
        out
    }
}

#[inline]
fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ck| acc * t + ck)
}

/// Monomial coefficients of the interpolant through `(t_i, v_i)`.
fn newton_to_monomial(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut dd = v.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (t[i] - t[i - level]);
        }
    }
    // Horner expansion of the Newton form.
    let mut c = vec![0.0; n];
    for i in (0..n).rev() {
        // c ← c·(τ − t_i) + dd_i
        let mut next = vec![0.0; n];
        for k in 0..n {
            if k + 1 < n {
                next[k + 1] += c[k];
            }
            next[k] -= c[k] * t[i];
        }
        next[0] += dd[i];
        c = next;
    }
    c
}

/// `D_s[G]` for a fixed piecewise polynomial `G` and `s ∈ {0, 1}`.
#[derive(Debug, Clone)]
pub(crate) struct SumMinusIntegral {
    poly: PiecewisePoly,
    s: i32,
    /// `∫_panel G(z) z^{s−2} dz` for every panel but the first.
    moments: Vec<f64>,
    /// First-panel polynomial in powers of `z`.
    first: Vec<f64>,
    /// `end_jet` at `τ = −1` and `τ = +1` for every panel.
    jets: Vec<[[f64; 4]; 2]>,
}

impl SumMinusIntegral {
    pub(crate) fn new(poly: PiecewisePoly, s: i32) -> Self {
        let moments = (0..poly.panel_count())
            .map(|p| if p == 0 { 0.0 } else { poly.weighted_integral(p, |z| z.powi(s - 2)) })
            .collect();
        let first = poly.first_panel_in_z();
        let jets = (0..poly.panel_count()).map(|p| [poly.end_jet(p, -1.0), poly.end_jet(p, 1.0)]).collect();
        Self { poly, s, moments, first, jets }
    }

    pub(crate) fn poly(&self) -> &PiecewisePoly {
        &self.poly
    }

    /// `D_s[G](x)` for `0 < x ≤ 1`.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let bounds = self.poly.bounds();
        let s = self.s;
        let mut total = self.first_panel(x);
        let xs = x.powi(s - 1);
        for p in 1..self.poly.panel_count() {
            let alpha = 1.0 / (bounds[p + 1] * x);
            let beta = 1.0 / (bounds[p] * x);
            let (n_lo, n_hi) = (alpha.floor(), beta.floor());
            if n_hi - n_lo <= DIRECT_SUM_LIMIT {
                let mut sum = 0.0;
                let mut n = n_lo + 1.0;
                while n <= n_hi {
                    let g = self.poly.eval_in(p, 1.0 / (n * x));
                    sum += if s == 0 { g } else { g / n };
                    n += 1.0;
                }
                total += sum - xs * self.moments[p];
            } else {
                total += self.endpoint_terms(p, x, beta, -1.0)
                    - self.endpoint_terms(p, x, alpha, 1.0);
            }
        }
        total
    }

    /// Euler–Maclaurin boundary expression
    /// `−B̃₁g + ½B̃₂g′ − (1/6)B̃₃g″ + (1/24)B̃₄g‴` at `ν`, where panel-local
    /// `τ` of `z = 1/(νx)` is `tau` (±1).
    fn endpoint_terms(&self, p: usize, x: f64, nu: f64, tau: f64) -> f64 {
        let z = 1.0 / (nu * x);
        let [g0, g1, g2, g3] = self.jets[p][usize::from(tau > 0.0)];
        let z1 = -z * z * x;
        let z2 = 2.0 * z * z * z * x * x;
        let z3 = -6.0 * z * z * z * z * x * x * x;
        let mut d = [g0, g1 * z1, g2 * z1 * z1 + g1 * z2, g3 * z1 * z1 * z1 + 3.0 * g2 * z1 * z2 + g1 * z3];
        if self.s == 1 {
            let r = 1.0 / nu;
            let (r2, r3, r4) = (r * r, r * r * r, r * r * r * r);
            d = [
                d[0] * r,
                d[1] * r - d[0] * r2,
                d[2] * r - 2.0 * d[1] * r2 + 2.0 * d[0] * r3,
                d[3] * r - 3.0 * d[2] * r2 + 6.0 * d[1] * r3 - 6.0 * d[0] * r4,
            ];
        }
        -b1(nu) * d[0] + 0.5 * b2(nu) * d[1] - b3(nu) * d[2] / 6.0 + b4(nu) * d[3] / 24.0
    }

    /// Contribution of `[0, b₁]`, where `G(z) = Σ c_k z^k` and
    /// `Σ_{n>β} (nx)^{−k} n^{−s} − ∫_β^∞ … = c_k b₁^{k+s} x^s Ê(k+s, β)`.
    fn first_panel(&self, x: f64) -> f64 {
        let b = self.poly.bounds()[1];
        let beta = 1.0 / (b * x);
        let xs = x.powi(self.s);
        let mut total = 0.0;
        for (k, ck) in self.first.iter().enumerate() {
            let e = k as i32 + self.s;
            if e == 0 {
                // only reached by antiderivatives, which vanish at 0
                continue;
            }
            total += ck * b.powi(e) * scaled_excess(e, beta);
        }
        total * xs
    }
}

/// `β^e · (Σ_{n>β} n^{−e} − ∫_β^∞ ν^{−e} dν)` for `e ≥ 1`, `β > 0`
/// (for `e = 1` the divergent parts cancel in the limit).
pub(crate) fn scaled_excess(e: i32, beta: f64) -> f64 {
    const SHIFT: f64 = 20.0;
    let ef = e as f64;
    let n0 = beta.floor() + 1.0;
    if n0 >= SHIFT {
        // ∫_β^{N₀} ν^{−e} dν · β^e
        let ratio = ((n0 - beta) / beta).ln_1p();
        let gap = if e == 1 { beta * ratio } else { -beta * ((1.0 - ef) * ratio).exp_m1() / (ef - 1.0) };
        (beta / n0).powi(e) * em_remainder_scaled(ef, n0) - gap
    } else {
        let mut sum = 0.0;
        let mut n = n0;
        while n < SHIFT {
            sum += n.powi(-e);
            n += 1.0;
        }
        let integral = if e == 1 {
            (SHIFT / beta).ln()
        } else {
            (beta.powf(1.0 - ef) - SHIFT.powf(1.0 - ef)) / (ef - 1.0)
        };
        let tail = SHIFT.powi(-e) * em_remainder_scaled(ef, SHIFT);
        beta.powi(e) * (sum - integral + tail)
    }
}

/// `N^e (Σ_{n≥N} n^{−e} − ∫_N^∞ ν^{−e} dν)` by Euler–Maclaurin for `N ≥ 20`:
/// `½ + Σ_k B_{2k}/(2k)! · e(e+1)…(e+2k−2) N^{1−2k}`.
fn em_remainder_scaled(e: f64, n: f64) -> f64 {
    let mut total = 0.5;
    let mut rising = e; // e(e+1)…(e+2k−2)
    let mut fact = 2.0; // (2k)!
    let mut power = 1.0 / n; // N^{1−2k}
    for k in 1..=8 {
        let term = BERNOULLI_NUMBERS[2 * k] / fact * rising * power;
        total += term;
        if term.abs() < 1e-18 {
            break;
        }
        rising *= (e + (2 * k - 1) as f64) * (e + (2 * k) as f64);
        fact *= ((2 * k + 1) * (2 * k + 2)) as f64;
        power /= n * n;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_form_reproduces_cubic() {
        let t = [-0.8, -0.2, 0.3, 0.9];
        let v: Vec<f64> = t.iter().map(|x: &f64| 1.0 - 2.0 * x + 0.5 * x.powi(3)).collect();
        let c = newton_to_monomial(&t, &v);
        for (got, want) in c.iter().zip([1.0, -2.0, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn scaled_excess_matches_direct_summation() {
        for (e, beta) in [(2, 3.7f64), (3, 25.2), (1, 7.5), (1, 40.25), (4, 19.5)] {
            let mut sum = 0.0;
            let mut n = beta.floor() + 1.0;
            let big = 2e6f64;
            while n <= big {
                sum += n.powi(-e);
                n += 1.0;
            }
            // tail beyond `big` and the integral, in closed form
            let ef = e as f64;
            let tail = -0.5 * big.powi(-e);
            let integral = if e == 1 {
                (big / beta).ln()
            } else {
                (beta.powf(1.0 - ef) - big.powf(1.0 - ef)) / (ef - 1.0)
            };
            let want = (sum + tail - integral) * beta.powi(e);
            let got = scaled_excess(e, beta);
            assert!((got - want).abs() < 1e-9, "e={e} beta={beta}: {got} vs {want}");
        }
    }

    fn brute_kernel_action(g: &PiecewisePoly, x: f64) -> f64 {
        // ∫₀¹ K(x,y) g(y) dy on breakpoint panels down to 1e-5
        let cut = 1e-5;
        let mut pts = crate::quadrature::kernel_breakpoints(x, cut);
        pts.extend_from_slice(g.bounds());
        pts.retain(|p| *p >= cut);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let rule = gauss_legendre(8).unwrap();
        pts.windows(2)
            .map(|w| rule.integrate(w[0], w[1], |y| crate::kernel::kernel(x, y) * g.eval(y)))
            .sum()
    }

    fn sample_poly() -> PiecewisePoly {
        let bounds = crate::quadrature::spectral_boundaries(16).unwrap();
        let local = &gauss_legendre(4).unwrap().nodes;
        let mut values = Vec::new();
        for p in 0..16 {
            for t in local {
                let y = bounds[p] + (bounds[p + 1] - bounds[p]) * (t + 1.0) / 2.0;
                values.push((7.0 * y).sin() + y * y);
            }
        }
        PiecewisePoly::from_nodal(&bounds, local, &values)
    }

    #[test]
    fn kernel_action_matches_brute_force() {
        let g = sample_poly();
        let f = g.antiderivative();
        let mass = f.right_end();
        let d0 = SumMinusIntegral::new(f, 0);
        for x in [1.0, 0.9, 0.6, 0.37, 0.13, 0.05, 0.013] {
            let fast = d0.eval(x) + mass * crate::kernel::kernel(x, 1.0);
            let slow = brute_kernel_action(&g, x);
            assert!((fast - slow).abs() < 1e-8, "x={x}: {fast} vs {slow}");
        }
    }

    #[test]
    fn derivative_of_kernel_action_matches_difference_quotient() {
        let g = sample_poly();
        let d1 = SumMinusIntegral::new(g.clone(), 1);
        for x in [0.9, 0.6, 0.37, 0.13, 0.013] {
            let h = 1e-6;
            let fd = (brute_kernel_action(&g, x + h) - brute_kernel_action(&g, x - h)) / (2.0 * h);
            let fast = -d1.eval(x) / (x * x);
            assert!((fast - fd).abs() < 1e-4 * fast.abs().max(1.0), "x={x}: {fast} vs {fd}");
        }
    }
}
