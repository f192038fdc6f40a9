//! Functionals of a single eigenfunction `φ` (eigenvalue `λ`): the constant
//! `Φ₁ = ∫₀¹ φ(y) dy/y`, the derivative series, one-sided derivatives at
//! reciprocal integers, the pair `Q(x) = xφ′(x)`, `P = −λ K Q`, expansion
//! coefficients of `P` and `Q`, Parseval sums, the integrals `Φ₀`, `Φ(x,y;σ)`
//! and normalised small-`x` residuals.
//!
//! Near `0` every eigenfunction follows `φ(x)/x ≈ ½λφ(1)B̃₂(1/x)` and
//! `xφ′(x) ≈ −λφ(1)B̃₁(1/x)`; integrals are computed on panels aligned with
//! the reciprocals `1/n` down to a cutoff and these forms supply the rest in
//! closed form.

use crate::bernoulli::{b1, b2, sawtooth_tail};
use crate::error::{domain, Result};
use crate::iterated::K2Evaluator;
use crate::kernel::{inverse_moment, kernel};
use crate::pwpoly::{PiecewisePoly, SumMinusIntegral};
use crate::quadrature::{gauss_legendre, merge_sorted};
use crate::resonance::{b2_series_tail, sawtooth_product_tail};
use crate::spectra::{eigenfunction, EigenfunctionHandle, Spectrum};

/// `C₀ = 1/3 + 1/(72√3 e)`, the constant in `|φ(x)| ≤ C₀|λ|³x`.
pub const C0: f64 = 1.0 / 3.0 + 1.0 / (72.0 * 1.732_050_807_568_877_2 * std::f64::consts::E);

/// `log(2π) − 7/4 = K₂(1, 1)`.
pub const K2_AT_ONE: f64 = 0.087_877_066_409_345_48;

/// Truncations for the derivative series and `Φ₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSeriesConfig {
    /// Terms `m` summed beyond `1/x` (at least until `1/(mx) ≤ 1/400`); the
    /// rest comes from the asymptotic tail.
    pub truncation: u64,
    /// Depth of the aligned panels in [`phi1_quadrature`].
    pub phi1_depth: u64,
}

impl Default for DerivativeSeriesConfig {
    fn default() -> Self {
        Self { truncation: 2_000, phi1_depth: 4_000 }
    }
}

impl DerivativeSeriesConfig {
    /// `C₀|λ|³/(xM)`, a bound for `Σ_{m>M'} |φ(1/(mx))|/m` with
    /// `M' = ⌊1/x⌋ + M`.
    pub fn tail_bound(&self, lambda: f64, x: f64) -> f64 {
        C0 * lambda.abs().powi(3) / (x * (self.truncation as f64 + (1.0 / x).floor()))
    }
}

/// Ascending breakpoints `1/n` (`n_lo ≤ n ≤ n_hi`) merged with `extra`.
fn reciprocal_partition(n_lo: u64, n_hi: u64, extra: &[f64]) -> Vec<f64> {
    let recips: Vec<f64> = (n_lo..=n_hi).rev().map(|n| 1.0 / n as f64).collect();
    merge_sorted(&recips, extra, 1e-13)
}

/// Fractions `k/m ∈ (lo, 1)` with `m ≤ max_den`, where `φ″` has its
/// largest jumps.
fn small_fractions(max_den: u64, lo: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (2..=max_den)
        .flat_map(|m| (1..m).map(move |k| k as f64 / m as f64))
        .filter(|f| *f > lo)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    out
}

/// Split pieces longer than `max_len`.
fn refine(pts: &[f64], max_len: f64) -> Vec<f64> {
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let k = ((w[1] - w[0]) / max_len).ceil().max(1.0) as usize;
        for i in 1..=k {
            out.push(if i == k { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / k as f64 });
        }
    }
    out
}

/// Partition of `[0, 1]` used for integrals against `φ` and `Q`.
const FINE_DEPTH: u64 = 300;
const FINE_ORDER: usize = 8;
const FRACTION_DEN: u64 = 16;
const FINE_MAX_LEN: f64 = 0.005;

/// Cached per-eigenfunction data on the fine partition.
#[derive(Debug, Clone)]
pub(crate) struct FineTable {
    /// Panel boundaries; the first panel is `[0, 1/FINE_DEPTH]`.
    pub bounds: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub phi: Vec<f64>,
    pub q: Vec<f64>,
    /// `D₀[∫Q̃]` for the interpolant `Q̃` of `Q` (zero on the first panel).
    q_action: SumMinusIntegral,
    q_mass: f64,
    phi_at_one: f64,
}

impl FineTable {
    fn build(h: &EigenfunctionHandle) -> Self {
        let grid_bounds: Vec<f64> = h.grid().panels.clone();
        let cut = 1.0 / FINE_DEPTH as f64;
        let mut extra: Vec<f64> = grid_bounds.into_iter().filter(|b| *b > cut).collect();
        extra = merge_sorted(&extra, &small_fractions(FRACTION_DEN, cut), 1e-13);
        let mids: Vec<f64> = (1..FINE_DEPTH).rev().map(|n| 2.0 / (2 * n + 1) as f64).collect();
        extra = merge_sorted(&extra, &mids, 1e-13);
        let mut bounds = reciprocal_partition(1, FINE_DEPTH, &extra);
        bounds = refine(&bounds, FINE_MAX_LEN);
        bounds.insert(0, 0.0);
        let rule = gauss_legendre(FINE_ORDER).expect("valid order");
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in bounds.windows(2).skip(1) {
            let (m, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push(m + r * t);
                weights.push(wt * r);
            }
        }
        let phi: Vec<f64> = nodes.iter().map(|x| h.phi(*x)).collect();
        let q: Vec<f64> = nodes.iter().map(|x| x * h.dphi(*x)).collect();
        let mut padded = vec![0.0; FINE_ORDER];
        padded.extend_from_slice(&q);
        let q_interp = PiecewisePoly::from_nodal(&bounds, &rule.nodes, &padded);
        let primitive = q_interp.antiderivative();
        let q_mass = primitive.right_end();
        Self {
            bounds,
            nodes,
            weights,
            phi,
            q,
            q_action: SumMinusIntegral::new(primitive, 0),
            q_mass,
            phi_at_one: h.phi(1.0),
        }
    }

    fn cutoff(&self) -> f64 {
        self.bounds[1]
    }
}

pub(crate) fn fine_table(h: &EigenfunctionHandle) -> &FineTable {
    h.fine_cache.get_or_init(|| FineTable::build(h))
}

/// `Φ₁ = ∫₀¹ φ(y) dy/y` (cached on the handle).
///
/// Since `φ = λ K g`, exchanging the integrals gives
/// `Φ₁ = λ ∫₀¹ g(z) S(z) dz` with `S(z) = ∫₀¹ K(y, z) dy/y` in closed form
/// ([`inverse_moment`]). In the model region `S(z) ≈ ½zB̃₂(1/z)`, so there the
/// contribution is `λa/2 · c³/540` up to oscillating terms.
pub fn phi1(h: &EigenfunctionHandle) -> f64 {
    *h.phi1_cache.get_or_init(|| {
        let c = h.model_cutoff();
        let model = h.model_amplitude() * c * c * c / 1080.0;
        h.eigenvalue() * (h.integrand_moment(inverse_moment) + model)
    })
}

/// `Φ₁` by direct quadrature of `φ(y)/y` on panels aligned with `1/n`,
/// `n ≤ depth`; below `1/depth` the integrand is replaced by
/// `½λφ(1)B̃₂(1/y)`, whose integral is a Bernoulli tail.
pub fn phi1_quadrature(h: &EigenfunctionHandle, depth: u64) -> f64 {
    let depth = depth.max(2);
    let cut = 1.0 / depth as f64;
    let extra: Vec<f64> = h.grid().panels.iter().copied().filter(|b| *b > cut).collect();
    let pts = refine(&reciprocal_partition(1, depth, &extra), FINE_MAX_LEN);
    let rule = gauss_legendre(FINE_ORDER).expect("valid order");
    let body: f64 = pts.windows(2).map(|w| rule.integrate(w[0], w[1], |y| h.phi(y) / y)).sum();
    let tail = 0.5 * h.eigenvalue() * h.phi(1.0) * sawtooth_tail(2, 2.0, depth as f64);
    body + tail
}

fn is_reciprocal_integer(x: f64) -> bool {
    let r = 1.0 / x;
    (r - r.round()).abs() <= 1e-12 * r
}

/// `Σ_{1/x < m ≤ ⌊1/x⌋+M} φ(1/(mx))/m` plus the asymptotic remainder
/// `(λφ(1)/(2x)) Σ_{m>M'} B̃₂(mx)/m²`.
pub fn derivative_series_sum(h: &EigenfunctionHandle, x: f64, truncation: u64) -> f64 {
    let first = (1.0 / x).floor() as u64 + 1;
    series_from(h, x, first, truncation)
}

/// The asymptotic tail is used only once `1/(mx)` is below this.
const SERIES_TAIL_START: f64 = 1.0 / 400.0;

fn series_from(h: &EigenfunctionHandle, x: f64, first: u64, truncation: u64) -> f64 {
    let last = (first - 1 + truncation).max((1.0 / (SERIES_TAIL_START * x)).ceil() as u64);
    let mut sum = 0.0;
    for m in (first..=last).rev() {
        let mf = m as f64;
        sum += h.phi(1.0 / (mf * x)) / mf;
    }
    sum + 0.5 * h.eigenvalue() * h.phi(1.0) / x * b2_series_tail(x, last as f64)
}

/// `φ′(x) = λx⁻²(Φ₁ − Σ_{m>1/x} φ(1/(mx))/m)` for `x ∈ (0, 1)` with `1/x`
/// not an integer (use [`one_sided_derivative`] there).
pub fn derivative(h: &EigenfunctionHandle, x: f64, cfg: &DerivativeSeriesConfig) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return domain(format!("derivative series needs x in (0, 1), got {x}"));
    }
    if is_reciprocal_integer(x) {
        return domain(format!("1/x is an integer at x = {x}; use one_sided_derivative"));
    }
    let lambda = h.eigenvalue();
    Ok(lambda / (x * x) * (phi1(h) - derivative_series_sum(h, x, cfg.truncation)))
}

/// Side of a one-sided limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// One-sided limit of `φ′` at `x = 1/n`:
/// left `λn²(Φ₁ − Σ_{m≥n+1} φ(n/m)/m)`, right `λn²(Φ₁ − Σ_{m≥n} φ(n/m)/m)`.
/// The two differ by `−λφ(1)n`.
pub fn one_sided_derivative(
    h: &EigenfunctionHandle,
    n: u64,
    side: Side,
    cfg: &DerivativeSeriesConfig,
) -> Result<f64> {
    if n == 0 {
        return domain("one_sided_derivative needs n >= 1");
    }
    let x = 1.0 / n as f64;
    let first = match side {
        Side::Left => n + 1,
        Side::Right => n,
    };
    let lambda = h.eigenvalue();
    let nf = n as f64;
    Ok(lambda * nf * nf * (phi1(h) - series_from(h, x, first, cfg.truncation)))
}

/// `Q(x) = xφ′(x)` (the left limit at reciprocal integers), `Q(0) = 0`.
pub fn q_eval(h: &EigenfunctionHandle, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("Q needs x in [0, 1], got {x}"));
    }
    Ok(if x == 0.0 { 0.0 } else { x * h.dphi(x) })
}

/// `P(x) = −λ ∫₀¹ K(x, y) Q(y) dy`.
///
/// `Q` is interpolated on the fine partition and pushed through the same
/// sum-minus-integral transform as `φ` itself; below the cutoff
/// `Q(y) ≈ −λφ(1)B̃₁(1/y)` and the product of sawtooth functions is
/// integrated through its resonant tail.
pub fn p_eval(h: &EigenfunctionHandle, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("P needs x in [0, 1], got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(p_unchecked(h, x))
}

fn p_unchecked(h: &EigenfunctionHandle, x: f64) -> f64 {
    let t = fine_table(h);
    let lambda = h.eigenvalue();
    let body = t.q_action.eval(x) + t.q_mass * kernel(x, 1.0);
    let tail = lambda * t.phi_at_one * sawtooth_product_tail(x, 1.0, 1.0 / t.cutoff());
    -lambda * (body + tail)
}

/// `∫₀¹ P²` and `∫₀¹ Q²` on the fine partition.
pub fn pq_norms_squared(h: &EigenfunctionHandle) -> (f64, f64) {
    let t = fine_table(h);
    let mut p2 = 0.0;
    let mut q2 = 0.0;
    for ((x, w), q) in t.nodes.iter().zip(&t.weights).zip(&t.q) {
        let p = p_unchecked(h, *x);
        p2 += w * p * p;
        q2 += w * q * q;
    }
    // Below the cutoff Q² ≈ λ²φ(1)² B̃₁², whose mean is 1/12.
    let q_tail = (h.eigenvalue() * t.phi_at_one).powi(2) * t.cutoff() / 12.0;
    (p2, q2 + q_tail)
}

/// Coefficients `aₕ = ⟨P, φₕ⟩`, `bₕ = ⟨Q, φₕ⟩` of one eigenfunction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExpansionCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `λₕ`, `h = 1..=H`.
    pub eigenvalues: Vec<f64>,
    /// `φ(1)φₕ(1) − ⟨φ, φₕ⟩`, which equals `(1 + λₕ/λ)bₕ`.
    pub closed_form: Vec<f64>,
    pub truncation: usize,
}

impl ExpansionCoefficients {
    /// The coefficients for `h ≤ H` only.
    pub fn leading(&self, truncation: usize) -> Self {
        let t = truncation.min(self.truncation);
        Self {
            a: self.a[..t].to_vec(),
            b: self.b[..t].to_vec(),
            eigenvalues: self.eigenvalues[..t].to_vec(),
            closed_form: self.closed_form[..t].to_vec(),
            truncation: t,
        }
    }

    /// `max_h |bₕ + (λₕ/λ)aₕ|`.
    pub fn relation_residual(&self, lambda: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .zip(&self.eigenvalues)
            .map(|((a, b), lh)| (b + lh / lambda * a).abs())
            .fold(0.0, f64::max)
    }

    /// `max_h |(1 + λₕ/λ)bₕ − (φ(1)φₕ(1) − ⟨φ, φₕ⟩)|`.
    pub fn closed_form_residual(&self, lambda: f64) -> f64 {
        self.b
            .iter()
            .zip(&self.closed_form)
            .zip(&self.eigenvalues)
            .map(|((b, c), lh)| ((1.0 + lh / lambda) * b - c).abs())
            .fold(0.0, f64::max)
    }
}

/// `aₕ`, `bₕ` for `h = 1..=H` by quadrature on the fine partition.
pub fn expansion_coefficients(
    h: &EigenfunctionHandle,
    spectrum: &Spectrum,
    truncation: usize,
) -> Result<ExpansionCoefficients> {
    if truncation > spectrum.len() {
        return domain(format!("H = {truncation} exceeds the {} resolved eigenvalues", spectrum.len()));
    }
    let t = fine_table(h);
    let p: Vec<f64> = t.nodes.iter().map(|x| p_unchecked(h, *x)).collect();
    let phi1_here = t.phi_at_one;
    let mut out = ExpansionCoefficients {
        a: Vec::with_capacity(truncation),
        b: Vec::with_capacity(truncation),
        eigenvalues: Vec::with_capacity(truncation),
        closed_form: Vec::with_capacity(truncation),
        truncation,
    };
    for j in 1..=truncation {
        let other = eigenfunction(spectrum, j)?;
        let mut a = 0.0;
        let mut b = 0.0;
        let mut overlap = 0.0;
        for (((x, w), pv), (qv, fv)) in t.nodes.iter().zip(&t.weights).zip(&p).zip(t.q.iter().zip(&t.phi)) {
            let g = other.phi(*x);
            a += w * pv * g;
            b += w * qv * g;
            overlap += w * fv * g;
        }
        // Below the cutoff both φ and φₕ are O(y); their contribution is
        // below the quadrature error.
        out.a.push(a);
        out.b.push(b);
        out.eigenvalues.push(other.eigenvalue());
        out.closed_form.push(phi1_here * other.phi(1.0) - overlap);
    }
    Ok(out)
}

/// Tapered Parseval comparison for one eigenfunction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ParsevalTapered {
    /// `Σ_{h≤H'} (1 + λₕ/λ)² aₕ²` for `H' = 1..=H`.
    pub partial_sums: Vec<f64>,
    pub lhs: f64,
    /// `K₂(1,1)λ²φ(1)² − 2φ(1)² + 1`.
    pub rhs: f64,
    /// `rhs − lhs`.
    pub gap: f64,
    /// `Σ aₕ²` and `∥P∥²`.
    pub a_squares: f64,
    pub p_norm_squared: f64,
}

pub fn parseval_tapered(h: &EigenfunctionHandle, spectrum: &Spectrum, truncation: usize) -> Result<ParsevalTapered> {
    Ok(parseval_from(h, &expansion_coefficients(h, spectrum, truncation)?))
}

/// [`parseval_tapered`] from already computed coefficients.
pub fn parseval_from(h: &EigenfunctionHandle, coeffs: &ExpansionCoefficients) -> ParsevalTapered {
    let lambda = h.eigenvalue();
    let partial_sums: Vec<f64> = coeffs
        .a
        .iter()
        .zip(&coeffs.eigenvalues)
        .scan(0.0, |acc, (a, lh)| {
            *acc += (1.0 + lh / lambda).powi(2) * a * a;
            Some(*acc)
        })
        .collect();
    let lhs = partial_sums.last().copied().unwrap_or(0.0);
    let f1 = h.phi(1.0);
    let rhs = K2_AT_ONE * lambda * lambda * f1 * f1 - 2.0 * f1 * f1 + 1.0;
    let (p_norm_squared, _) = pq_norms_squared(h);
    ParsevalTapered {
        partial_sums,
        lhs,
        rhs,
        gap: rhs - lhs,
        a_squares: coeffs.a.iter().map(|a| a * a).sum(),
        p_norm_squared,
    }
}

/// `∫_lo^hi φ(z) z^{−σ} dz` for `0 ≤ lo ≤ hi ≤ 1`: panels at `1/n` above a
/// cutoff, `½λφ(1) z^{1−σ}B̃₂(1/z)` below it.
fn phi_moment(h: &EigenfunctionHandle, lo: f64, hi: f64, sigma: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n_lo = (1.0 / hi).ceil().max(1.0) as u64;
    let n_cut = n_lo + 4_000;
    let cut = (1.0 / n_cut as f64).max(lo);
    let mut extra: Vec<f64> = h.grid().panels.iter().copied().filter(|b| *b > cut && *b < hi).collect();
    extra.insert(0, cut);
    extra.push(hi);
    let recips: Vec<f64> = reciprocal_partition(n_lo, n_cut, &[])
        .into_iter()
        .filter(|r| *r > cut && *r < hi)
        .collect();
    let pts = refine(&merge_sorted(&recips, &extra, 1e-14), FINE_MAX_LEN);
    let rule = gauss_legendre(FINE_ORDER).expect("valid order");
    let body: f64 = pts
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |z| h.phi(z) * z.powf(-sigma)))
        .sum();
    if cut <= lo {
        return body;
    }
    // ∫_lo^cut z^{1−σ} B̃₂(1/z) dz = ∫_{1/cut}^{1/lo} B̃₂(u) u^{σ−3} du
    let e = 3.0 - sigma;
    let upper = if lo > 0.0 { sawtooth_tail(2, e, 1.0 / lo) } else { 0.0 };
    body + 0.5 * h.eigenvalue() * h.phi(1.0) * (sawtooth_tail(2, e, 1.0 / cut) - upper)
}

/// `Φ₀(x) = ∫₀ˣ φ(y) dy`.
pub fn phi0(h: &EigenfunctionHandle, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("Φ₀ needs x in [0, 1], got {x}"));
    }
    Ok(phi_moment(h, 0.0, x, 0.0))
}

/// `Φ(x, y; σ) = ∫ₓ^y φ(z) z^{−σ} dz` (signed), `σ < 3`.
pub fn phi_sigma(h: &EigenfunctionHandle, x: f64, y: f64, sigma: f64) -> Result<f64> {
    if !(sigma < 3.0) {
        return domain(format!("Φ(x, y; σ) needs σ < 3, got {sigma}"));
    }
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return domain(format!("Φ(x, y; σ) needs x, y in [0, 1], got ({x}, {y})"));
    }
    Ok(if x <= y { phi_moment(h, x, y, sigma) } else { -phi_moment(h, y, x, sigma) })
}

/// Normalised small-`x` residuals at one point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AsymptoticRow {
    pub x: f64,
    /// `[xφ′(x) + λφ(1)B̃₁(1/x)] / [x(1 + log(1/x))]`.
    pub r1: f64,
    /// `[φ(x)/x − ½λφ(1)B̃₂(1/x)] / [x(1 + log(1/x))]`.
    pub r2: f64,
}

pub fn asymptotic_residuals(h: &EigenfunctionHandle, xs: &[f64]) -> Result<Vec<AsymptoticRow>> {
    let lambda = h.eigenvalue();
    let f1 = h.phi(1.0);
    xs.iter()
        .map(|&x| {
            if !(x > 0.0 && x < 1.0) {
                return domain(format!("asymptotic residuals need x in (0, 1), got {x}"));
            }
            let inv = 1.0 / x;
            let norm = x * (1.0 + inv.ln());
            let r1 = (x * h.dphi(x) + lambda * f1 * b1(inv)) / norm;
            let r2 = (h.phi(x) / x - 0.5 * lambda * f1 * b2(inv)) / norm;
            Ok(AsymptoticRow { x, r1, r2 })
        })
        .collect()
}

/// `|xφ′(x) + λφ(1)B̃₁(1/x) + λ²φ(1)K₂(x,1) − λ² ∫₀¹ K₂(x,z) zφ′(z) dz|`.
pub fn iterated_derivative_residual(h: &EigenfunctionHandle, x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return domain(format!("x must lie in (0, 1], got {x}"));
    }
    let t = fine_table(h);
    let eval = K2Evaluator::default();
    let lambda = h.eigenvalue();
    let f1 = t.phi_at_one;
    let integral: f64 = t
        .nodes
        .iter()
        .zip(&t.weights)
        .zip(&t.q)
        .map(|((z, w), q)| w * eval.closed_unchecked(x, *z) * q)
        .sum();
    let lhs = x * h.dphi(x);
    let rhs = -lambda * f1 * b1(1.0 / x) - lambda * lambda * f1 * eval.closed_unchecked(x, 1.0)
        + lambda * lambda * integral;
    Ok((lhs - rhs).abs())
}

