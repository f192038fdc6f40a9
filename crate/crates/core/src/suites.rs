//! Verification suites: the numbered acceptance checks and a few extra
//! module invariants, grouped by module and returned as report entries.
//!
//! Entry ids start with `cNN.` for acceptance criterion `NN` and with
//! `inv.` for the additional invariants. Tolerances below are the nominal
//! ones; [`SuiteContext::tol_scale`] multiplies every numeric tolerance
//! (never a theorem's bound), so a larger scale only loosens checks.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, DerivativeSeriesConfig, ExpansionCoefficients, Side, C0};
use crate::error::{domain, Error, Result};
use crate::iterated::{self, k2_closed, k2_diag_exact, k2_quadrature, K2Evaluator};
use crate::kernel::{delta_r, hs_norm_squared, kernel};
use crate::quadrature::spectral_grid;
use crate::report::{Entry, Metadata, VerificationReport};
use crate::spectra::{
    assemble_galerkin, bilinear_residuals, cross_validate_spectrum, eigenfunction, eigensolve, EigenfunctionHandle,
    Spectrum, DEFAULT_JACOBI_TOL, DEFAULT_ORDER, DEFAULT_PANELS,
};
use crate::zeta;

/// Seed of all sampled checks.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;
/// Truncation `H` of the expansion coefficients.
pub const EXPANSION_TRUNCATION: usize = 40;
/// Panel count of the trace-formula spectrum (`N = 400` at order 4).
pub const TRACE_PANELS: usize = 100;

/// `log(2π) − 7/4`.
fn k2_at_one() -> f64 {
    TAU.ln() - 1.75
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernel,
    Iterated,
    Spectra,
    Calculus,
    Zeta,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["kernel", "iterated", "spectra", "calculus", "zeta", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Self::Kernel => "kernel",
            Self::Iterated => "iterated",
            Self::Spectra => "spectra",
            Self::Calculus => "calculus",
            Self::Zeta => "zeta",
            Self::All => "all",
        }
    }

    /// Acceptance criteria run by this suite.
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Self::Kernel => vec![17],
            Self::Iterated => vec![1, 2, 20],
            Self::Spectra => vec![3, 4, 5, 6, 7],
            Self::Calculus => vec![8, 9, 10, 11, 12, 18, 19],
            Self::Zeta => vec![13, 14, 15, 16],
            Self::All => (1..=20).collect(),
        }
    }

    /// The single suites that make up this one.
    pub fn members(self) -> Vec<Suite> {
        match self {
            Self::All => vec![Self::Kernel, Self::Iterated, Self::Spectra, Self::Calculus, Self::Zeta],
            s => vec![s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kernel" => Self::Kernel,
            "iterated" => Self::Iterated,
            "spectra" => Self::Spectra,
            "calculus" => Self::Calculus,
            "zeta" => Self::Zeta,
            "all" => Self::All,
            _ => return domain(format!("unknown suite '{s}' (expected one of {})", Self::NAMES.join(", "))),
        })
    }
}

/// One-line description of each acceptance criterion.
pub fn criterion_title(n: u8) -> &'static str {
    match n {
        1 => "K2(1,1) = log(2pi) - 7/4 by three routes",
        2 => "closed vs quadrature K2 on 200 random points",
        3 => "HS norm below 1/2 and |lambda_1| above 2 and 1/||K||",
        4 => "trace formula partial sums at N = 400",
        5 => "K vs K2 eigenvalue cross-validation",
        6 => "bilinear expansion of K2",
        7 => "uniform bound |phi_j| <= |lambda_j|/2",
        8 => "derivative series vs finite differences",
        9 => "derivative jumps at 1/n",
        10 => "x phi' + phi - lambda phi(1) K(x,1) = P",
        11 => "b_h = -(lambda_h/lambda) a_h and its closed form",
        12 => "tapered Parseval identity",
        13 => "zeta partial-sum identity and Euler-constant limit",
        14 => "Stirling-type limit",
        15 => "Laplace transform of h",
        16 => "Hankel (log-domain) vs x-domain action",
        17 => "series-term integral below 2/3",
        18 => "bound suite on random samples",
        19 => "small-x asymptotic residuals",
        20 => "discontinuity of K2 at the origin",
        _ => "unknown criterion",
    }
}

/// Shared state for a verification run: parameters plus the lazily computed
/// default spectrum and expansion coefficients.
#[derive(Debug)]
pub struct SuiteContext {
    pub panels: usize,
    pub order: usize,
    pub tol_scale: f64,
    pub seed: u64,
    spectrum: OnceLock<Spectrum>,
    coefficients: OnceLock<ExpansionCoefficients>,
}

impl Default for SuiteContext {
    fn default() -> Self {
        Self::new(1.0)
    }
}

impl SuiteContext {
    pub fn new(tol_scale: f64) -> Self {
        Self {
            panels: DEFAULT_PANELS,
            order: DEFAULT_ORDER,
            tol_scale,
            seed: DEFAULT_SEED,
            spectrum: OnceLock::new(),
            coefficients: OnceLock::new(),
        }
    }

    /// The default (refined) spectrum, computed on first use.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = Spectrum::compute(self.panels, self.order)?;
        Ok(self.spectrum.get_or_init(|| s))
    }

    /// `aₕ`, `bₕ` of `φ₁` for `h ≤ 40`, computed on first use.
    pub fn coefficients(&self) -> Result<&ExpansionCoefficients> {
        if let Some(c) = self.coefficients.get() {
            return Ok(c);
        }
        let spec = self.spectrum()?;
        let c = calculus::expansion_coefficients(&eigenfunction(spec, 1)?, spec, EXPANSION_TRUNCATION)?;
        Ok(self.coefficients.get_or_init(|| c))
    }

    fn handle(&self, j: usize) -> Result<EigenfunctionHandle> {
        eigenfunction(self.spectrum()?, j)
    }

    fn tol(&self, t: f64) -> f64 {
        t * self.tol_scale
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn metadata(&self) -> Metadata {
        Metadata {
            panels: self.panels,
            order: self.order,
            grid_size: self.panels * self.order,
            truncations: vec![
                ("expansion_h".into(), EXPANSION_TRUNCATION as u64),
                ("derivative_series_m".into(), DerivativeSeriesConfig::default().truncation),
                ("trace_grid_n".into(), (TRACE_PANELS * 4) as u64),
            ],
            seed: self.seed,
            tol_scale: self.tol_scale,
        }
    }
}

/// Run one acceptance criterion; every entry carries the criterion's
/// wall-clock time.
pub fn run_criterion(n: u8, ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let start = Instant::now();
    let entries = match n {
        1 => c01(ctx)?,
        2 => c02(ctx)?,
        3 => c03(ctx)?,
        4 => c04(ctx)?,
        5 => c05(ctx)?,
        6 => c06(ctx)?,
        7 => c07(ctx)?,
        8 => c08(ctx)?,
        9 => c09(ctx)?,
        10 => c10(ctx)?,
        11 => c11(ctx)?,
        12 => c12(ctx)?,
        13 => c13(ctx)?,
        14 => c14(ctx)?,
        15 => c15(ctx)?,
        16 => c16(ctx)?,
        17 => c17(ctx)?,
        18 => c18(ctx)?,
        19 => c19(ctx)?,
        20 => c20(ctx)?,
        _ => return domain(format!("there is no criterion {n}")),
    };
    let secs = start.elapsed().as_secs_f64();
    Ok(entries.into_iter().map(|e| e.with_runtime(secs)).collect())
}

/// Run a suite: its acceptance criteria followed by its extra invariants.
pub fn run_suite(suite: Suite, ctx: &SuiteContext) -> Result<VerificationReport> {
    let mut entries = Vec::new();
    for member in suite.members() {
        for n in member.criteria() {
            entries.extend(run_criterion(n, ctx)?);
        }
        let start = Instant::now();
        let extra = invariants(member, ctx)?;
        let secs = start.elapsed().as_secs_f64();
        entries.extend(extra.into_iter().map(|e| e.with_runtime(secs)));
    }
    Ok(VerificationReport { suite: suite.name().to_string(), entries, metadata: ctx.metadata() })
}

fn invariants(suite: Suite, ctx: &SuiteContext) -> Result<Vec<Entry>> {
    match suite {
        Suite::Kernel => kernel_invariants(ctx),
        Suite::Iterated => iterated_invariants(ctx),
        Suite::Spectra => spectra_invariants(ctx),
        Suite::Calculus => calculus_invariants(ctx),
        Suite::Zeta => zeta_invariants(ctx),
        Suite::All => Ok(Vec::new()),
    }
}

/// Uniform sample in `[lo, hi]` at least `gap` away from every `1/n`.
fn generic_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64, gap: f64) -> f64 {
    loop {
        let x: f64 = rng.random_range(lo..hi);
        let n = (1.0 / x).round().max(1.0);
        let near = [n - 1.0, n, n + 1.0].iter().filter(|m| **m >= 1.0).any(|m| (x - 1.0 / m).abs() < gap);
        if !near {
            return x;
        }
    }
}

fn is_nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

/// Least-squares slope of `log|r|` against `k`.
pub fn log_slope(ks: &[f64], rs: &[f64]) -> f64 {
    let n = ks.len() as f64;
    let ys: Vec<f64> = rs.iter().map(|r| r.abs().ln()).collect();
    let (mk, my) = (ks.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = ks.iter().zip(&ys).map(|(k, y)| (k - mk) * (y - my)).sum();
    let sxx: f64 = ks.iter().map(|k| (k - mk) * (k - mk)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------- criteria

fn c01(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let anchor = "K2(1,1) = log(2pi) - 7/4";
    let tol = ctx.tol(1e-6);
    Ok(vec![
        Entry::within("c01.k2_at_one.quadrature", anchor, k2_quadrature(1.0, 1.0)?, k2_at_one(), tol),
        Entry::within("c01.k2_at_one.closed", anchor, k2_closed(1.0, 1.0)?, k2_at_one(), tol),
        Entry::within("c01.k2_at_one.diagonal", anchor, k2_diag_exact(1.0)?, k2_at_one(), tol),
    ])
}

fn c02(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let mut rng = ctx.rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x = rng.random_range(0.05..=1.0);
        let y = rng.random_range(0.05..=1.0);
        worst = worst.max((k2_closed(x, y)? - k2_quadrature(x, y)?).abs());
    }
    Ok(vec![Entry::within(
        "c02.route_equivalence.max_abs",
        "closed-form K2 equals the defining integral",
        worst,
        0.0,
        ctx.tol(1e-7),
    )])
}

fn c03(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let hs = hs_norm_squared().sqrt();
    let mut out = vec![Entry::at_most("c03.hs_norm", "||K||_HS < 1/2", hs, 0.5, 0.0)];
    let fine = eigensolve(&assemble_galerkin(&spectral_grid(2 * ctx.panels, ctx.order)?)?, DEFAULT_JACOBI_TOL)?;
    for (n, spec) in [(ctx.panels * ctx.order, ctx.spectrum()?), (2 * ctx.panels * ctx.order, &fine)] {
        let l1 = spec.eigenvalue(1)?.abs();
        out.push(Entry::at_least(format!("c03.lambda1_above_two.n{n}"), "|lambda_1| > 2", l1, 2.0, 0.0));
        out.push(Entry::at_least(
            format!("c03.lambda1_above_inverse_hs.n{n}"),
            "|lambda_1| > 1/||K||_HS",
            l1,
            1.0 / hs,
            0.0,
        ));
    }
    Ok(out)
}

fn c04(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let grid = spectral_grid(TRACE_PANELS, 4)?;
    let spec = eigensolve(&assemble_galerkin(&grid)?, DEFAULT_JACOBI_TOL)?;
    let partial: Vec<f64> = spec
        .eigenvalues
        .iter()
        .take(40)
        .scan(0.0, |acc, l| {
            *acc += 1.0 / (l * l);
            Some(*acc)
        })
        .collect();
    let trace = iterated::diag_integral();
    let s40 = *partial.last().expect("40 eigenvalues");
    let anchor = "sum 1/lambda_h^2 = integral of K2(x,x)";
    Ok(vec![
        Entry::holds("c04.partial_sums_increasing", anchor, partial.windows(2).all(|w| w[1] > w[0])),
        Entry::at_most("c04.partial_sum_below_trace", anchor, s40, trace, 0.0),
        Entry::at_most("c04.relative_gap_h40", anchor, (trace - s40) / trace, ctx.tol(0.05), 0.0),
    ])
}

fn c05(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let cv = cross_validate_spectrum(ctx.spectrum()?, 10)?;
    Ok(cv
        .entries
        .iter()
        .map(|e| {
            Entry::within(
                format!("c05.relative.j{}", e.j),
                "eigenvalues of K2 are 1/lambda_j^2",
                e.relative,
                0.0,
                ctx.tol(1e-3),
            )
        })
        .collect())
}

fn c06(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let points: Vec<f64> = (0..30).map(|i| 0.2 + 0.8 * i as f64 / 29.0).collect();
    let r = bilinear_residuals(ctx.spectrum()?, &points, &[5, 10, 20, 30])?;
    let anchor = "K2(x,y) = sum phi_h(x) phi_h(y) / lambda_h^2";
    let nonincreasing = r.windows(2).all(|w| w[1] <= w[0]);
    let mut out = vec![Entry::holds("c06.sup_residual_nonincreasing", anchor, nonincreasing)];
    for (h, v) in [5, 10, 20, 30].iter().zip(&r) {
        out.push(Entry::at_least(format!("c06.sup_residual.h{h}"), anchor, *v, 0.0, 0.0));
    }
    out.push(Entry::at_least("c06.reduction_h5_to_h30", anchor, r[0] / r[3], 5.0, 0.0));
    Ok(out)
}

fn c07(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for j in 1..=10 {
        let h = ctx.handle(j)?;
        let lambda = h.eigenvalue().abs();
        let mut sup: f64 = 0.0;
        for k in 0..1000 {
            sup = sup.max(h.evaluate((k as f64 + 0.5) / 1000.0)?.abs());
        }
        out.push(Entry::at_most(
            format!("c07.excess_over_half_lambda.j{j}"),
            "|phi_j(x)| <= |lambda_j|/2",
            (sup - 0.5 * lambda) / lambda,
            0.0,
            ctx.tol(1e-6),
        ));
    }
    Ok(out)
}

/// Relative error of the series derivative against a central difference,
/// measured against `max(|FD|, |λ|)` so that zeros of `φ′` do not dominate.
fn derivative_mismatch(h: &EigenfunctionHandle, x: f64, cfg: &DerivativeSeriesConfig) -> Result<f64> {
    let step = 1e-5;
    let fd = (h.evaluate(x + step)? - h.evaluate(x - step)?) / (2.0 * step);
    let series = calculus::derivative(h, x, cfg)?;
    Ok((series - fd).abs() / fd.abs().max(h.eigenvalue().abs()))
}

fn c08(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let cfg = DerivativeSeriesConfig::default();
    let mut rng = ctx.rng(8);
    let mut out = Vec::new();
    for j in 1..=5 {
        let h = ctx.handle(j)?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let x = generic_point(&mut rng, 0.05, 0.95, 1e-3);
            worst = worst.max(derivative_mismatch(&h, x, &cfg)?);
        }
        out.push(Entry::within(
            format!("c08.series_vs_fd.j{j}"),
            "phi'(x) = lambda x^-2 (Phi_1 - sum_{m>1/x} phi(1/(mx))/m)",
            worst,
            0.0,
            ctx.tol(1e-3),
        ));
    }
    Ok(out)
}

fn c09(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let cfg = DerivativeSeriesConfig::default();
    let h = ctx.handle(1)?;
    let lambda = h.eigenvalue();
    let f1 = h.evaluate(1.0)?;
    let mut out = Vec::new();
    for n in 2..=4u64 {
        let right = calculus::one_sided_derivative(&h, n, Side::Right, &cfg)?;
        let left = calculus::one_sided_derivative(&h, n, Side::Left, &cfg)?;
        let expected = -lambda * f1 * n as f64;
        out.push(Entry::within(
            format!("c09.jump.n{n}"),
            "phi'(1/n+) - phi'(1/n-) = -lambda phi(1) n",
            right - left,
            expected,
            ctx.tol(0.01) * expected.abs(),
        ));
    }
    Ok(out)
}

fn c10(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let cfg = DerivativeSeriesConfig::default();
    let h = ctx.handle(1)?;
    let lambda = h.eigenvalue();
    let f1 = h.evaluate(1.0)?;
    let mut rng = ctx.rng(10);
    let mut sup: f64 = 0.0;
    for _ in 0..20 {
        let x = generic_point(&mut rng, 0.05, 0.95, 1e-3);
        let lhs = x * calculus::derivative(&h, x, &cfg)? + h.evaluate(x)? - lambda * f1 * kernel(x, 1.0);
        sup = sup.max((lhs - calculus::p_eval(&h, x)?).abs());
    }
    Ok(vec![Entry::within(
        "c10.sup_residual",
        "x phi'(x) + phi(x) - lambda phi(1) K(x,1) = P(x)",
        sup,
        0.0,
        ctx.tol(1e-3) * lambda * lambda,
    )])
}

fn c11(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let lambda = ctx.handle(1)?.eigenvalue();
    let c = ctx.coefficients()?.leading(20);
    Ok(vec![
        Entry::within(
            "c11.relation_max_h20",
            "b_h = -(lambda_h/lambda) a_h",
            c.relation_residual(lambda),
            0.0,
            ctx.tol(1e-4) * lambda.abs(),
        ),
        Entry::within(
            "c11.closed_form_max_h20",
            "(1 + lambda_h/lambda) b_h = phi(1) phi_h(1) - <phi, phi_h>",
            c.closed_form_residual(lambda),
            0.0,
            ctx.tol(1e-3),
        ),
    ])
}

fn c12(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let h = ctx.handle(1)?;
    let p = calculus::parseval_from(&h, ctx.coefficients()?);
    let anchor = "sum (1 + lambda_h/lambda)^2 a_h^2 = K2(1,1) lambda^2 phi(1)^2 - 2 phi(1)^2 + 1";
    Ok(vec![
        Entry::holds("c12.partial_sums_nondecreasing", anchor, is_nondecreasing(&p.partial_sums)),
        Entry::at_most("c12.lhs_below_rhs", anchor, p.lhs, p.rhs, ctx.tol(1e-6)),
        Entry::at_most("c12.relative_gap_h40", anchor, p.gap / p.rhs, ctx.tol(0.05), 0.0),
        Entry::at_most("c12.bessel_for_p", "sum a_h^2 <= ||P||^2", p.a_squares, p.p_norm_squared, ctx.tol(1e-6)),
    ])
}

fn c13(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let anchor = "(s+1) x^(s+1) int K(x,y) y^s dy = zeta(s+1) - sum_{n<=1/x} n^-(s+1) - x^s/s + x^(s+1) K(1,x)";
    let mut out = Vec::new();
    for (s, x) in [(1.0, 0.3), (0.5, 0.7), (2.0, 0.45)] {
        out.push(Entry::within(
            format!("c13.residual.s{s}.x{x}"),
            anchor,
            zeta::zeta_connect_residual(s, x)?,
            0.0,
            ctx.tol(1e-8),
        ));
    }
    out.push(Entry::within(
        "c13.euler_limit.x0.4",
        "x int K(x,y) dy = gamma - sum_{n<=1/x} 1/n + log(1/x) + x K(1,x)",
        zeta::euler_limit_residual(0.4)?,
        0.0,
        ctx.tol(1e-6),
    ));
    Ok(out)
}

fn c14(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let anchor = "int K(x,y) dy/y = log(floor(1/x)!) - floor(1/x) log(1/x) + 1/x - log sqrt(2pi/x)";
    let mut out = Vec::new();
    for x in [0.3, 1.0] {
        let r = zeta::stirling_alt_residual(x, 1e-6)?;
        let r_half = zeta::stirling_alt_residual(x, 5e-7)?;
        out.push(Entry::within(format!("c14.residual.x{x}"), anchor, r, 0.0, ctx.tol(1e-3)));
        out.push(Entry::at_most(format!("c14.halving_cutoff.x{x}"), anchor, r_half, r, 0.0));
    }
    Ok(out)
}

fn c15(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    [0.5, 2.0, 3.0]
        .iter()
        .map(|&s| {
            Ok(Entry::within(
                format!("c15.residual.s{s}"),
                "int K(1,y) y^(s-1) dy = (zeta(s) - 1/(s-1) - 1/2)/s",
                zeta::laplace_h_residual(s)?,
                0.0,
                ctx.tol(1e-8),
            ))
        })
        .collect()
}

fn c16(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    [0.0, 0.5, 2.0]
        .iter()
        .map(|&u| {
            let log_domain = zeta::hankel_apply(|v: f64| (-1.5 * v).exp(), u)?;
            let x_domain = zeta::hankel_via_x(|y: f64| y, u)?;
            Ok(Entry::within(
                format!("c16.dual_routes.u{u}"),
                "G(u) = int h(u+v) F(v) dv equals sqrt(x) int K(x,y) f(y) dy at x = e^-u",
                log_domain,
                x_domain,
                ctx.tol(1e-6),
            ))
        })
        .collect()
}

fn c17(_ctx: &SuiteContext) -> Result<Vec<Entry>> {
    [0.1, 0.5, 0.9]
        .iter()
        .map(|&x| {
            Ok(Entry::at_most(
                format!("c17.integral.x{x}"),
                "int_x^1 |sum_{m>1/y} B2(my/x)/m^2| dy/y^2 < 2/3",
                iterated::series_term_integral(x)?,
                2.0 / 3.0,
                0.0,
            ))
        })
        .collect()
}

fn c18(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    const SAMPLES: usize = 100;
    let cfg = DerivativeSeriesConfig::default();
    let mut rng = ctx.rng(18);
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let a: f64 = rng.random_range(0.01..=1.0);
        let b: f64 = rng.random_range(0.01..=1.0);
        if a == b {
            continue;
        }
        worst = worst.max(delta_r(a, b, 1.0)? / (4.0 * (1.0 / b - 1.0 / a).abs()));
    }
    out.push(Entry::at_most("c18.delta1_ratio", "Delta_1(a,b) <= 4|1/b - 1/a|", worst, 1.0, 0.0));

    let handles = (1..=10).map(|j| ctx.handle(j)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let h = &handles[rng.random_range(0..10)];
        let x = 10f64.powf(-4.0 * rng.random::<f64>());
        let lambda = h.eigenvalue().abs();
        worst = worst.max(h.evaluate(x)?.abs() / (x * C0 * lambda.powi(3)));
    }
    out.push(Entry::at_most("c18.small_x_envelope_ratio", "|phi_j(x)|/x <= C0 |lambda_j|^3", worst, 1.0, 0.0));

    let spec = ctx.spectrum()?;
    let mut worst: f64 = 0.0;
    for j in 1..=SAMPLES.min(spec.len()) {
        let h = eigenfunction(spec, j)?;
        worst = worst.max(calculus::phi1(&h).abs() / (1.5 * h.eigenvalue().abs()));
    }
    out.push(Entry::at_most("c18.phi1_ratio", "|Phi_1| < (3/2)|lambda|", worst, 1.0, 0.0));

    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let h = &handles[rng.random_range(0..10)];
        let x = generic_point(&mut rng, 0.05, 0.99, 1e-6);
        let lambda = h.eigenvalue().abs();
        let bound = (3.0 + lambda.ln()) * lambda * lambda / (x * x);
        worst = worst.max(calculus::derivative(h, x, &cfg)?.abs() / bound);
    }
    out.push(Entry::at_most("c18.derivative_ratio", "|phi'(x)| < (3 + log|lambda|) lambda^2 / x^2", worst, 1.0, 0.0));

    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let h = &handles[rng.random_range(0..10)];
        let a: f64 = rng.random_range(0.001..=1.0);
        let b: f64 = rng.random_range(0.001..=1.0);
        let (y, x) = if a <= b { (a, b) } else { (b, a) };
        if x == y {
            continue;
        }
        let lambda = h.eigenvalue().abs();
        let bound = (3.0 + lambda.ln()) * lambda * lambda * (1.0 / y - 1.0 / x);
        worst = worst.max((h.evaluate(x)? - h.evaluate(y)?).abs() / bound);
    }
    out.push(Entry::at_most(
        "c18.increment_ratio",
        "|phi(x) - phi(y)| <= (3 + log|lambda|) lambda^2 (1/y - 1/x)",
        worst,
        1.0,
        0.0,
    ));
    Ok(out)
}

fn c19(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let h = ctx.handle(1)?;
    let ks: Vec<f64> = (1..=10).map(f64::from).collect();
    let xs: Vec<f64> = ks.iter().map(|k| 0.9 * 2f64.powf(-k)).collect();
    let rows = calculus::asymptotic_residuals(&h, &xs)?;
    let r1: Vec<f64> = rows.iter().map(|r| r.r1).collect();
    let r2: Vec<f64> = rows.iter().map(|r| r.r2).collect();
    Ok(vec![
        Entry::at_most(
            "c19.r1_log_slope",
            "x phi'(x) = -lambda phi(1) B1(1/x) + O(x log(1/x))",
            log_slope(&ks, &r1),
            ctx.tol(0.1),
            0.0,
        ),
        Entry::at_most(
            "c19.r2_log_slope",
            "phi(x)/x = lambda phi(1) B2(1/x)/2 + O(x log(1/x))",
            log_slope(&ks, &r2),
            ctx.tol(0.1),
            0.0,
        ),
    ])
}

fn c20(_ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let diag_const = 1.0 / 6.0 + 1.0 / (36.0 * 3f64.sqrt());
    let alpha = 5.0 / 16.0;
    let eval = K2Evaluator::default();
    let (mut diag_ratio, mut diag_min, mut off_max): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for n in 2..=64u32 {
        let x = 1.0 / f64::from(n);
        let d = eval.closed(x, x)?;
        diag_ratio = diag_ratio.max((d - 1.0 / 12.0).abs() / (diag_const * x));
        diag_min = diag_min.min(d);
        off_max = off_max.max(eval.closed(x, alpha * x)?.abs());
    }
    Ok(vec![
        Entry::at_most("c20.diagonal_ratio", "|K2(1/n,1/n) - 1/12| <= (1/6 + 1/(36 sqrt 3))/n", diag_ratio, 1.0, 0.0),
        Entry::at_most("c20.off_diagonal_max", "|K2(1/n, a/n)| <= (4/15) a for a = 5/16", off_max, 4.0 / 15.0 * alpha, 0.0),
        Entry::at_least("c20.separation", "K2 is discontinuous at the origin", diag_min - off_max, 0.01, 0.0),
    ])
}

// -------------------------------------------------------------- invariants

fn kernel_invariants(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let mut rng = ctx.rng(101);
    let symmetric = (0..10_000).all(|_| {
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        kernel(x, y) == kernel(y, x)
    });
    let hs2 = hs_norm_squared();
    let trace = iterated::diag_integral();
    Ok(vec![
        Entry::holds("inv.kernel.symmetry", "K(x,y) = K(y,x)", symmetric),
        Entry::within("inv.kernel.k_at_one", "K(1,1) = 1/2", kernel(1.0, 1.0), 0.5, 0.0),
        Entry::within("inv.kernel.hs_equals_trace", "||K||_HS^2 = int K2(x,x) dx", hs2, trace, ctx.tol(1e-8)),
        Entry::within("inv.kernel.delta_diagonal", "Delta_r(b,b) = 0", delta_r(0.5, 0.5, 0.0)?, 0.0, 0.0),
    ])
}

fn iterated_invariants(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for x in [0.3, 0.7] {
        let lhs = 0.5 * x * (kernel(1.0, x).powi(2) - k2_closed(x, x)?);
        let rhs = crate::kernel::inverse_moment(x);
        out.push(Entry::within(
            format!("inv.iterated.mixed_moment.x{x}"),
            "x (K(1,x)^2 - K2(x,x))/2 = int K(x,y) dy/y",
            lhs,
            rhs,
            ctx.tol(1e-4),
        ));
    }
    let bound = 0.25 + 1.0 / (36.0 * 3f64.sqrt());
    let mut worst: f64 = 0.0;
    for i in 1..=12 {
        for k in 1..=12 {
            let (x, y) = (i as f64 / 12.0, k as f64 / 12.0);
            worst = worst.max(k2_closed(x, y)?.abs() / (bound * x.min(y) / x.max(y)));
        }
    }
    out.push(Entry::at_most(
        "inv.iterated.off_diagonal_ratio",
        "|K2(x,y)| <= (1/4 + 1/(36 sqrt 3)) min/max",
        worst,
        1.0,
        0.0,
    ));
    Ok(out)
}

fn spectra_invariants(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let spec = ctx.spectrum()?;
    let ordered = spec.eigenvalues.windows(2).all(|w| w[0].abs() <= w[1].abs());
    let h = eigenfunction(spec, 1)?;
    Ok(vec![
        Entry::holds("inv.spectra.ordered_by_modulus", "|lambda_1| <= |lambda_2| <= ...", ordered),
        Entry::within("inv.spectra.unit_norm", "||phi_1|| = 1", h.inner(&h), 1.0, ctx.tol(1e-4)),
        Entry::at_least("inv.spectra.sign_convention", "phi_j(1) > 0", h.evaluate(1.0)?, 0.0, 0.0),
    ])
}

fn calculus_invariants(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    let h = ctx.handle(1)?;
    let lambda = h.eigenvalue();
    // Grid quadrature of the node values: a coarse second route, good to ~1e-4.
    let node_mean: f64 = h.node_values().iter().zip(&h.grid().weights).map(|(v, w)| v * w).sum();
    let oracle = calculus::phi1_quadrature(&h, DerivativeSeriesConfig::default().phi1_depth);
    Ok(vec![
        Entry::within(
            "inv.calculus.iterated_derivative_identity.x0.37",
            "x phi'(x) = -lambda phi(1) B1(1/x) - lambda^2 phi(1) K2(x,1) + lambda^2 int K2(x,z) z phi'(z) dz",
            calculus::iterated_derivative_residual(&h, 0.37)?,
            0.0,
            ctx.tol(1e-3) * lambda * lambda,
        ),
        Entry::within("inv.calculus.phi1_two_routes", "Phi_1 = int phi(y) dy/y", calculus::phi1(&h), oracle, ctx.tol(1e-4)),
        Entry::within("inv.calculus.phi0_at_one", "Phi_0(1) = <phi, 1>", calculus::phi0(&h, 1.0)?, node_mean, ctx.tol(1e-3)),
    ])
}

fn zeta_invariants(ctx: &SuiteContext) -> Result<Vec<Entry>> {
    Ok(vec![
        Entry::within("inv.zeta.zeta2", "zeta(2) = pi^2/6", zeta::zeta(2.0)?, PI * PI / 6.0, ctx.tol(1e-12)),
        Entry::within("inv.zeta.zeta0", "zeta(0) = -1/2", zeta::zeta(0.0)?, -0.5, ctx.tol(1e-12)),
        Entry::within(
            "inv.zeta.stirling_at_one",
            "zeta'(0) = -log(2pi)/2",
            zeta::stirling_rhs(1.0)?,
            1.0 - 0.5 * TAU.ln(),
            ctx.tol(1e-12),
        ),
        Entry::within(
            "inv.zeta.stirling_extrapolated.x0.3",
            "int K(x,y) dy/y = log(floor(1/x)!) - floor(1/x) log(1/x) + 1/x - log sqrt(2pi/x)",
            zeta::stirling_alt_extrapolated(0.3, 1e-6)?,
            0.0,
            ctx.tol(1e-8),
        ),
    ])
}
