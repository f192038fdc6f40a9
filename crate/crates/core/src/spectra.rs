//! Discretisation of the eigenproblem `φ = λ K φ`, its dense symmetric
//! eigensolution, eigenvalue ordering, and eigenfunction interpolation.
//!
//! Two discretisations share one matrix type:
//!
//! * [`assemble`] — point Nyström, `Aᵢⱼ = √(wᵢwⱼ) K(xᵢ, xⱼ)`.
//! * [`assemble_galerkin`] — exact Galerkin projection onto the panel-wise
//!   Lagrange polynomials through the Gauss nodes, scaled so that the basis
//!   is orthonormal. Because `K` jumps along the hyperbolas `xy = 1/n`, point
//!   sampling converges only like the panel width, while the Galerkin matrix
//!   integrates the jumps exactly; on the aligned [`spectral_grid`] it is
//!   the default.
//!
//! Eigenfunctions are extended from the nodes by one application of the
//! operator to the piecewise-polynomial interpolant `φ̂`:
//! `φ(x) = λ ∫₀¹ K(x, y) φ̂(y) dy`, which is continuous, vanishes at 0 and
//! reproduces the jump structure of the derivative exactly.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::iterated::K2Evaluator;
use crate::jacobi::jacobi;
use crate::kernel::{hs_norm_squared, kernel};
use crate::pwpoly::{PiecewisePoly, SumMinusIntegral};
use crate::quadrature::{gauss_legendre, spectral_grid, QuadratureRule};
use crate::bernoulli::sawtooth_tail;
use crate::resonance::{b2_series_tail, b2b1_tail};

/// Default off-diagonal tolerance for [`eigensolve`].
pub const DEFAULT_JACOBI_TOL: f64 = 1e-12;
/// Relative tolerance under which eigenvalues share a multiplicity group.
pub const MULTIPLICITY_TOL: f64 = 1e-6;
/// Default number of panels of the spectral grid (`× 4` nodes = 256).
pub const DEFAULT_PANELS: usize = 64;
/// Default Gauss order per panel.
pub const DEFAULT_ORDER: usize = 4;

/// How the matrix was built from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    Nystrom,
    Galerkin,
}

/// Symmetric matrix representing `K` on a grid.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub grid: Arc<QuadratureRule>,
    /// Row-major `N × N`.
    pub matrix: Vec<f64>,
    pub scheme: Scheme,
}

impl DiscretizedOperator {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim() + j]
    }

    pub fn frobenius_norm_squared(&self) -> f64 {
        self.matrix.iter().map(|a| a * a).sum()
    }
}

/// Point-Nyström matrix `√(wᵢwⱼ) K(xᵢ, xⱼ)`.
pub fn assemble(grid: &QuadratureRule) -> DiscretizedOperator {
    assemble_with(grid, kernel)
}

/// Point-Nyström matrix `√(wᵢwⱼ) k(xᵢ, xⱼ)` for a symmetric kernel `k`;
/// only the upper triangle is evaluated.
pub fn assemble_with(
    grid: &QuadratureRule,
    k: impl Fn(f64, f64) -> f64 + Sync,
) -> DiscretizedOperator {
    let n = grid.len();
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| sw[i] * sw[j] * k(grid.nodes[i], grid.nodes[j])).collect())
        .collect();
    let mut matrix = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            matrix[i * n + i + off] = *v;
            matrix[(i + off) * n + i] = *v;
        }
    }
    DiscretizedOperator { grid: Arc::new(grid.clone()), matrix, scheme: Scheme::Nystrom }
}

/// Products `xy` below this are left out of the Galerkin integrals; there
/// `K` averages out over each period of `1/(xy)` and the omitted part is of
/// order `T0²`.
const GALERKIN_T0: f64 = 1e-4;

/// Galerkin matrix `∫∫ K(x,y) ℓᵢ(x) ℓⱼ(y) dx dy / √(wᵢwⱼ)` for the
/// Lagrange basis `ℓᵢ` through the Gauss nodes of each panel.
pub fn assemble_galerkin(grid: &QuadratureRule) -> Result<DiscretizedOperator> {
    let q = grid.order;
    let panels = grid.panel_count();
    if grid.len() != q * panels {
        return domain("Galerkin assembly needs a composite rule with one order per panel");
    }
    let local = &gauss_legendre(q)?.nodes;
    let b = &grid.panels;
    let blocks: Vec<Vec<Vec<f64>>> = (0..panels)
        .into_par_iter()
        .map(|p| (p..panels).map(|r| galerkin_block(local, b[p], b[p + 1], b[r], b[r + 1])).collect())
        .collect();
    let n = grid.len();
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let mut matrix = vec![0.0; n * n];
    for (p, row) in blocks.iter().enumerate() {
        for (off, block) in row.iter().enumerate() {
            let r = p + off;
            for i in 0..q {
                for j in 0..q {
                    let v = if r == p {
                        0.5 * (block[i * q + j] + block[j * q + i])
                    } else {
                        block[i * q + j]
                    };
                    let (gi, gj) = (p * q + i, r * q + j);
                    let a = v / (sw[gi] * sw[gj]);
                    matrix[gi * n + gj] = a;
                    matrix[gj * n + gi] = a;
                }
            }
        }
    }
    Ok(DiscretizedOperator { grid: Arc::new(grid.clone()), matrix, scheme: Scheme::Galerkin })
}

/// Lagrange basis values at local coordinate `t`.
#[inline]
fn lagrange(local: &[f64], t: f64, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut v = 1.0;
        for (k, tk) in local.iter().enumerate() {
            if k != i {
                v *= (t - tk) / (local[i] - tk);
            }
        }
        *o = v;
    }
}

/// `∫_{a1}^{a2}∫_{b1}^{b2} K(x,y) ℓᵢ(x) ℓⱼ(y) dy dx` (row-major `q × q`).
///
/// In `t = xy` the kernel is `f(t) = ½ − {1/t}`, so the integral becomes
/// `∫ f(t) ∫ ℓᵢ(x) ℓⱼ(t/x) d(log x) dt`. The outer integral is split where
/// `f` jumps and where the inner range changes form; the inner integral is
/// smooth in `log x`.
fn galerkin_block(local: &[f64], a1: f64, a2: f64, b1: f64, b2: f64) -> Vec<f64> {
    let q = local.len();
    let mut out = vec![0.0; q * q];
    let (lo, hi) = (a1 * b1, a2 * b2);
    let start = lo.max(GALERKIN_T0);
    if start >= hi {
        return out;
    }
    let mut pts = vec![start, hi];
    for c in [a1 * b2, a2 * b1] {
        if c > start && c < hi {
            pts.push(c);
        }
    }
    let m_lo = (1.0 / hi).floor() as u64 + 1;
    let m_hi = (1.0 / start).ceil() as u64;
    for m in m_lo..m_hi {
        let t = 1.0 / m as f64;
        if t > start && t < hi {
            pts.push(t);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let outer = gauss_legendre(6).expect("valid order");
    let inner = gauss_legendre(8).expect("valid order");
    let (ax, bx) = (0.5 * (a1 + a2), 0.5 * (a2 - a1));
    let (ay, by) = (0.5 * (b1 + b2), 0.5 * (b2 - b1));
    let mut lx = vec![0.0; q];
    let mut ly = vec![0.0; q];
    let mut acc = vec![0.0; q * q];
    for w in pts.windows(2) {
        let (tl, th) = (w[0], w[1]);
        let (tm, tr) = (0.5 * (tl + th), 0.5 * (th - tl));
        // f is smooth on (tl, th): 1/t lies strictly between two integers.
        let k = (1.0 / tm).floor();
        for (tn, tw) in outer.nodes.iter().zip(&outer.weights) {
            let t = tm + tr * tn;
            let f = 0.5 - (1.0 / t - k);
            let xl = a1.max(t / b2);
            let xh = a2.min(t / b1);
            if xh <= xl {
                continue;
            }
            let (sl, sh) = (xl.ln(), xh.ln());
            let pieces = (sh - sl).ceil().max(1.0);
            let step = (sh - sl) / pieces;
            acc.iter_mut().for_each(|v| *v = 0.0);
            for piece in 0..pieces as usize {
                let s0 = sl + step * piece as f64;
                let (sm, sr) = (s0 + 0.5 * step, 0.5 * step);
                for (sn, sw) in inner.nodes.iter().zip(&inner.weights) {
                    let x = (sm + sr * sn).exp();
                    let y = t / x;
                    lagrange(local, (x - ax) / bx, &mut lx);
                    lagrange(local, (y - ay) / by, &mut ly);
                    let weight = sw * sr;
                    for i in 0..q {
                        let wi = weight * lx[i];
                        for j in 0..q {
                            acc[i * q + j] += wi * ly[j];
                        }
                    }
                }
            }
            let scale = tw * tr * f;
            for (o, a) in out.iter_mut().zip(&acc) {
                *o += scale * a;
            }
        }
    }
    out
}

/// Ordered kernel eigenvalues with their vectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// `λⱼ`, ordered by `|λ|` ascending, positive before negative on ties.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors in matrix coordinates, one per eigenvalue (Ritz
    /// combinations for refined modes).
    pub vectors: Vec<Vec<f64>>,
    /// 1-based multiplicity group of each eigenvalue.
    pub groups: Vec<usize>,
    pub grid: Arc<QuadratureRule>,
    pub scheme: Scheme,
    /// Iterated eigenfunctions of the refined modes, by position.
    handles: Arc<Vec<Option<EigenfunctionHandle>>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `λⱼ` for 1-based `j`.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        Ok(self.eigenvalues[j - 1])
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.len() {
            return domain(format!("eigen index {j} outside 1..={}", self.len()));
        }
        Ok(())
    }

    /// Default spectrum: Galerkin on the aligned spectral grid, with the
    /// leading modes refined by [`refine_leading`](Self::refine_leading).
    pub fn compute(panels: usize, order: usize) -> Result<Self> {
        let grid = spectral_grid(panels, order)?;
        let mut spec = eigensolve(&assemble_galerkin(&grid)?, DEFAULT_JACOBI_TOL)?;
        spec.refine_leading()?;
        Ok(spec)
    }

    /// Replace the leading eigenpairs (up to 40) by one Rayleigh–Ritz step on
    /// the span of the iterated eigenvectors `λ K φ̂`.
    ///
    /// The refined eigenvalues are markedly more accurate than the matrix
    /// ones; the corresponding `vectors` become the Ritz combinations of the
    /// matrix eigenvectors. All pairs are then re-ordered.
    pub fn refine_leading(&mut self) -> Result<()> {
        let ritz = ritz_pairs(self)?;
        let keep = ritz.len();
        if keep == 0 {
            return Ok(());
        }
        let n = self.vectors.first().map_or(0, Vec::len);
        let mut entries: Vec<(f64, (Vec<f64>, Option<EigenfunctionHandle>))> = ritz
            .into_iter()
            .map(|(lambda, c, handle)| {
                let mut v = vec![0.0; n];
                for (cj, vec) in c.iter().zip(&self.vectors) {
                    v.iter_mut().zip(vec).for_each(|(a, b)| *a += cj * b);
                }
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter_mut().for_each(|a| *a /= norm);
                (lambda, (v, Some(handle)))
            })
            .collect();
        entries.extend(
            self.eigenvalues.iter().zip(&self.vectors).skip(keep).map(|(l, v)| (*l, (v.clone(), None))),
        );
        order_pairs(&mut entries);
        self.eigenvalues = entries.iter().map(|e| e.0).collect();
        self.groups = multiplicity_groups(&self.eigenvalues);
        let mut handles = Vec::with_capacity(entries.len());
        self.vectors = entries
            .into_iter()
            .enumerate()
            .map(|(i, (_, (v, h)))| {
                handles.push(h.map(|mut h| {
                    h.index = i + 1;
                    h
                }));
                v
            })
            .collect();
        self.handles = Arc::new(handles);
        Ok(())
    }
}

/// Full eigendecomposition; matrix eigenvalues `μ` become `λ = 1/μ`, those
/// with `|μ| < 10⁻³/N` are discarded, and the rest are ordered by `|λ|`
/// with positive before negative on ties.
pub fn eigensolve(op: &DiscretizedOperator, tol: f64) -> Result<Spectrum> {
    if !(tol > 0.0) {
        return domain(format!("eigensolve needs tol > 0, got {tol}"));
    }
    let n = op.dim();
    let eig = jacobi(op.matrix.clone(), n, tol)?;
    let floor = 1e-3 / n as f64;
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .values
        .into_iter()
        .zip(eig.vectors)
        .filter(|(mu, _)| mu.abs() >= floor)
        .map(|(mu, v)| (1.0 / mu, v))
        .collect();
    order_pairs(&mut pairs);
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let groups = multiplicity_groups(&eigenvalues);
    Ok(Spectrum {
        eigenvalues,
        vectors: pairs.into_iter().map(|p| p.1).collect(),
        groups,
        grid: op.grid.clone(),
        scheme: op.scheme,
        handles: Arc::new(Vec::new()),
    })
}

/// Order by `|λ|`, positive before negative on ties up to rounding.
fn order_pairs<T>(pairs: &mut [(f64, T)]) {
    pairs.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then_with(|| b.0.total_cmp(&a.0)));
    for i in 1..pairs.len() {
        let (a, b) = (pairs[i - 1].0, pairs[i].0);
        if a < 0.0 && b > 0.0 && (a.abs() - b.abs()).abs() <= 1e-12 * b.abs() {
            pairs.swap(i - 1, i);
        }
    }
}

fn multiplicity_groups(values: &[f64]) -> Vec<usize> {
    let mut reps: Vec<f64> = Vec::new();
    values
        .iter()
        .map(|v| {
            let found = reps.iter().position(|r| (r - v).abs() <= MULTIPLICITY_TOL * v.abs());
            match found {
                Some(g) => g + 1,
                None => {
                    reps.push(*v);
                    reps.len()
                }
            }
        })
        .collect()
}

/// Which rule fixed the sign of an eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SignConvention {
    /// `φ(1) > 0`.
    PositiveAtOne,
    /// `|φ(1)| < 1e-9`; the node value of largest magnitude is positive.
    PositiveLargestNode,
}

/// One eigenfunction `φ = λ K g`: the integrand `g` is a piecewise
/// polynomial obtained from the discrete eigenvector by iteration, so `φ`
/// and `φ′` are evaluated through the exact kernel action.
#[derive(Debug, Clone)]
pub struct EigenfunctionHandle {
    lambda: f64,
    index: usize,
    values: Vec<f64>,
    grid: Arc<QuadratureRule>,
    sign: SignConvention,
    scale: f64,
    integrand: Arc<Integrand>,
    pub(crate) phi1_cache: Arc<OnceLock<f64>>,
    pub(crate) fine_cache: Arc<OnceLock<crate::calculus::FineTable>>,
}

/// Handle for the `j`-th (1-based) eigenfunction.
///
/// Modes refined by [`Spectrum::refine_leading`] come with their iterated
/// Ritz function; the others are built from the matrix eigenvector.
pub fn eigenfunction(spec: &Spectrum, j: usize) -> Result<EigenfunctionHandle> {
    spec.check_index(j)?;
    if let Some(Some(h)) = spec.handles.get(j - 1) {
        return Ok(h.clone());
    }
    let values = unit_node_values(spec, j);
    let handle =
        EigenfunctionHandle::from_nodes(spec.eigenvalues[j - 1], j, values, spec.grid.clone(), SignConvention::PositiveAtOne)?;
    Ok(handle.with_sign_convention())
}

/// Matrix eigenvector `j` as node values of a unit-norm function.
fn unit_node_values(spec: &Spectrum, j: usize) -> Vec<f64> {
    let grid = &spec.grid;
    let mut values: Vec<f64> = spec.vectors[j - 1].iter().zip(&grid.weights).map(|(v, w)| v / w.sqrt()).collect();
    let norm: f64 = values.iter().zip(&grid.weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    values
}

/// Size of the Rayleigh–Ritz basis and the number of modes kept from it.
const RITZ_BASIS: usize = 80;
const RITZ_KEEP: usize = 40;

/// One Rayleigh–Ritz step for the leading eigenfunctions.
///
/// Each matrix eigenvector is iterated once (`u = λ K φ̂`) and mapped again
/// (`v = K u`) on the refined partition. The Ritz problem for `K` on
/// `span{u}` is symmetrised and solved by Jacobi after Löwdin
/// orthogonalisation, and every Ritz vector is mapped once more, so the
/// handles are iterates of the Ritz vectors.
fn ritz_pairs(spec: &Spectrum) -> Result<Vec<(f64, Vec<f64>, EigenfunctionHandle)>> {
    let m = RITZ_BASIS.min(spec.len());
    let keep = if m == RITZ_BASIS { RITZ_KEEP } else { m * RITZ_KEEP / RITZ_BASIS };
    if keep == 0 {
        return Ok(Vec::new());
    }
    let grid = &spec.grid;
    let bounds = refined_bounds(grid);
    let rule = gauss_legendre(REFINED_ORDER)?;
    let (nodes, weights) = panel_nodes(&bounds, &rule.nodes, &rule.weights);
    let local = &gauss_legendre(grid.order)?.nodes;
    let images: Vec<(Vec<f64>, Vec<f64>)> = (1..=m)
        .into_par_iter()
        .map(|j| {
            let lambda = spec.eigenvalues[j - 1];
            let coarse = Integrand::new(PiecewisePoly::from_nodal(&grid.panels, local, &unit_node_values(spec, j)), 0.0);
            let u: Vec<f64> = nodes.iter().map(|y| lambda * coarse.action(*y)).collect();
            let g = Integrand::from_node_values(&bounds, &rule.nodes, &u, 0.5 * lambda * lambda * coarse.action(1.0));
            let v: Vec<f64> = nodes.iter().map(|y| g.action(*y)).collect();
            (u, v)
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { weights.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum() };
    let mut gram = vec![0.0; m * m];
    let mut stiff = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            gram[i * m + j] = dot(&images[i].0, &images[j].0);
            stiff[i * m + j] = 0.5 * (dot(&images[i].0, &images[j].1) + dot(&images[j].0, &images[i].1));
        }
    }
    // Löwdin: G^{-1/2} = V D^{-1/2} Vᵀ
    let ge = jacobi(gram, m, 1e-15)?;
    let mut inv_sqrt = vec![0.0; m * m];
    for (d, vec) in ge.values.iter().zip(&ge.vectors) {
        if *d <= 0.0 {
            return domain("Ritz basis is not linearly independent");
        }
        let f = 1.0 / d.sqrt();
        for i in 0..m {
            for j in 0..m {
                inv_sqrt[i * m + j] += f * vec[i] * vec[j];
            }
        }
    }
    let reduced = congruence(&inv_sqrt, &stiff, m);
    let re = jacobi(reduced, m, 1e-15)?;
    let mut pairs: Vec<(f64, Vec<f64>)> = re
        .values
        .iter()
        .zip(&re.vectors)
        .filter(|(mu, _)| mu.abs() > 0.0)
        .map(|(mu, y)| {
            let c: Vec<f64> = (0..m).map(|i| (0..m).map(|k| inv_sqrt[i * m + k] * y[k]).sum()).collect();
            (1.0 / mu, c)
        })
        .collect();
    order_pairs(&mut pairs);
    pairs
        .into_iter()
        .take(keep)
        .enumerate()
        .map(|(k, (lambda, c))| {
            let mut psi = vec![0.0; nodes.len()];
            for (cj, (_, v)) in c.iter().zip(&images) {
                psi.iter_mut().zip(v).for_each(|(p, vj)| *p += lambda * cj * vj);
            }
            let norm = dot(&psi, &psi).sqrt();
            psi.iter_mut().for_each(|p| *p /= norm);
            let mut integrand = Integrand::from_node_values(&bounds, &rule.nodes, &psi, 0.0);
            integrand.amp = 0.5 * lambda * lambda * integrand.action(1.0);
            let values = grid.nodes.iter().map(|x| lambda * integrand.action(*x)).collect();
            let handle = EigenfunctionHandle::from_integrand(lambda, k + 1, values, spec.grid.clone(), integrand)
                .with_sign_convention();
            Ok((lambda, c, handle))
        })
        .collect()
}

/// `S A S` for symmetric `S`, `A` (row-major `m × m`).
fn congruence(s: &[f64], a: &[f64], m: usize) -> Vec<f64> {
    let mut sa = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let sik = s[i * m + k];
            for j in 0..m {
                sa[i * m + j] += sik * a[k * m + j];
            }
        }
    }
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let v = sa[i * m + k];
            for j in 0..m {
                out[i * m + j] += v * s[k * m + j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            let avg = 0.5 * (out[i * m + j] + out[j * m + i]);
            out[i * m + j] = avg;
            out[j * m + i] = avg;
        }
    }
    out
}

impl EigenfunctionHandle {
    /// Build a handle from node values on a composite Gauss grid: the node
    /// interpolant is iterated through `λ K` on a refined partition.
    pub fn from_nodes(
        lambda: f64,
        index: usize,
        values: Vec<f64>,
        grid: Arc<QuadratureRule>,
        sign: SignConvention,
    ) -> Result<Self> {
        if values.len() != grid.len() || grid.len() != grid.order * grid.panel_count() {
            return domain("node values must match a composite Gauss grid");
        }
        let local = &gauss_legendre(grid.order)?.nodes;
        let bounds = refined_bounds(&grid);
        let mut integrand = Integrand::new(PiecewisePoly::from_nodal(&grid.panels, local, &values), 0.0);
        for _ in 0..SLOAN_PASSES {
            integrand = integrand.iterate(lambda, &bounds)?;
        }
        let mut out = Self::from_integrand(lambda, index, values, grid, integrand);
        out.sign = sign;
        Ok(out)
    }

    fn from_integrand(lambda: f64, index: usize, values: Vec<f64>, grid: Arc<QuadratureRule>, integrand: Integrand) -> Self {
        Self {
            lambda,
            index,
            values,
            grid,
            sign: SignConvention::PositiveAtOne,
            scale: 1.0,
            integrand: Arc::new(integrand),
            phi1_cache: Arc::new(OnceLock::new()),
            fine_cache: Arc::new(OnceLock::new()),
        }
    }

    /// Fix the sign: `φ(1) > 0`, or if `|φ(1)| < 10⁻⁹` the node value of
    /// largest magnitude is positive.
    fn with_sign_convention(self) -> Self {
        let at_one = self.phi(1.0);
        let (sign, flip) = if at_one.abs() >= 1e-9 {
            (SignConvention::PositiveAtOne, at_one < 0.0)
        } else {
            let largest = self.values.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            (SignConvention::PositiveLargestNode, largest < 0.0)
        };
        let mut out = if flip { self.negated() } else { self };
        out.sign = sign;
        out
    }

    fn negated(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = -*v);
        out.integrand = Arc::new(self.integrand.scaled(-1.0));
        out.phi1_cache = Arc::new(OnceLock::new());
        out.fine_cache = Arc::new(OnceLock::new());
        out
    }

    /// The same eigenfunction multiplied by `c` (no longer unit norm).
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale *= c;
        out.phi1_cache = Arc::new(OnceLock::new());
        out.fine_cache = Arc::new(OnceLock::new());
        out
    }

    pub fn eigenvalue(&self) -> f64 {
        self.lambda
    }

    /// 1-based position in the spectrum.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn sign_convention(&self) -> SignConvention {
        self.sign
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn grid(&self) -> &QuadratureRule {
        &self.grid
    }

    /// Node values `φ(xᵢ)` (times the scale factor).
    pub fn node_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.scale).collect()
    }

    /// Grid inner product `Σ wᵢ f(xᵢ) g(xᵢ)` of the node values.
    pub fn inner(&self, other: &Self) -> f64 {
        self.grid
            .weights
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum::<f64>()
            * self.scale
            * other.scale
    }

    /// `φ(x) = λ ∫₀¹ K(x, y) φ̂(y) dy` for `x ∈ [0, 1]`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.phi(x))
    }

    /// `φ′(x)`, the exact derivative of [`evaluate`](Self::evaluate), for
    /// `x ∈ (0, 1]`. At `x = 1/n` the left limit is returned.
    pub fn evaluate_derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= 1.0) {
            return domain(format!("derivative needs x in (0, 1], got {x}"));
        }
        Ok(self.dphi(x))
    }

    /// The plain Nyström extension `λ Σ wᵢ K(x, xᵢ) φ(xᵢ)`.
    pub fn nystrom_value(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        let s: f64 = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.values)
            .map(|((xi, w), v)| w * kernel(x, *xi) * v)
            .sum();
        Ok(self.scale * self.lambda * s)
    }

    /// Unchecked `φ(x)`.
    #[inline]
    pub(crate) fn phi(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.scale * self.lambda * self.integrand.action(x)
    }

    /// Unchecked `φ′(x)`.
    #[inline]
    pub(crate) fn dphi(&self, x: f64) -> f64 {
        self.scale * self.lambda * self.integrand.action_slope(x)
    }
}

impl EigenfunctionHandle {
    /// `∫ g f` for the integrand `g` with `φ = λ K g` (scaled), excluding
    /// the model region `[0, model_cutoff]`.
    pub(crate) fn integrand_moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.scale * self.integrand.moment(f)
    }

    /// `a` with `g(y) = a·y B̃₂(1/y)` on `[0, model_cutoff]` (scaled).
    pub(crate) fn model_amplitude(&self) -> f64 {
        self.scale * self.integrand.amp
    }

    pub(crate) fn model_cutoff(&self) -> f64 {
        1.0 / MODEL_DEPTH as f64
    }
}

/// Below this the integrand follows `½λφ(1) y B̃₂(1/y)`.
const MODEL_DEPTH: u64 = 200;
/// Grid boundaries above this are kept in the refined partition.
const REFINE_BELOW: f64 = 1.0 / 16.0;

/// A piecewise-polynomial integrand `g` with its kernel action
/// `∫₀¹ K(x, y) g(y) dy` and the derivative of that action. Below the first
/// panel `g` is either zero or the model `amp·y B̃₂(1/y)`.
#[derive(Debug)]
struct Integrand {
    /// `D₀[∫g]`.
    value_op: SumMinusIntegral,
    /// `D₁[g]`.
    slope_op: SumMinusIntegral,
    /// `∫₀¹ g` (polynomial part).
    mass: f64,
    /// Amplitude of the model on `[0, 1/MODEL_DEPTH]`; zero for none.
    amp: f64,
}

impl Integrand {
    fn new(poly: PiecewisePoly, amp: f64) -> Self {
        let primitive = poly.antiderivative();
        let mass = primitive.right_end();
        Self {
            value_op: SumMinusIntegral::new(primitive, 0),
            slope_op: SumMinusIntegral::new(poly, 1),
            mass,
            amp,
        }
    }

    fn action(&self, x: f64) -> f64 {
        let mut v = self.value_op.eval(x) + self.mass * kernel(x, 1.0);
        if self.amp != 0.0 {
            v -= self.amp * b2b1_tail(1.0 / x, MODEL_DEPTH as f64);
        }
        v
    }

    fn action_slope(&self, x: f64) -> f64 {
        let mut v = -self.slope_op.eval(x);
        if self.amp != 0.0 {
            let depth = MODEL_DEPTH as f64;
            let first_beyond = (depth / x).floor();
            v += self.amp * (sawtooth_tail(2, 2.0, depth) - b2_series_tail(x, first_beyond) / x);
        }
        v / (x * x)
    }

    /// `∫ g(z) f(z) dz` over the polynomial panels (the model region is
    /// excluded); `f` should be smooth on every panel.
    fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        let poly = self.slope_op.poly();
        let rule = gauss_legendre(12).expect("valid order");
        let b = poly.bounds();
        (1..poly.panel_count()).map(|p| rule.integrate(b[p], b[p + 1], |z| poly.eval_in(p, z) * f(z))).sum()
    }

    /// The iterate `λ K g` interpolated on `bounds`, with the small-`y`
    /// model on the first panel.
    fn iterate(&self, lambda: f64, bounds: &[f64]) -> Result<Self> {
        let rule = gauss_legendre(REFINED_ORDER)?;
        let (nodes, _) = panel_nodes(bounds, &rule.nodes, &rule.weights);
        let values: Vec<f64> = nodes.iter().map(|y| lambda * self.action(*y)).collect();
        let amp = 0.5 * lambda * lambda * self.action(1.0);
        Ok(Self::from_node_values(bounds, &rule.nodes, &values, amp))
    }

    /// Interpolant of `values` at the mapped `local` nodes of every panel of
    /// `bounds` but the first (the model region).
    fn from_node_values(bounds: &[f64], local: &[f64], values: &[f64], amp: f64) -> Self {
        let mut padded = vec![0.0; local.len()];
        padded.extend_from_slice(values);
        Self::new(PiecewisePoly::from_nodal(bounds, local, &padded), amp)
    }

    fn scaled(&self, c: f64) -> Self {
        Self::new(self.slope_op.poly().scaled(c), c * self.amp)
    }
}

/// Partition for the iterated integrand, aligned with the points where
/// `φ′` or `φ″` jumps with the largest amplitude: reciprocals `1/n`, their
/// midpoints `2/(2n+1)` and fractions with small denominators. The first
/// panel `[0, 1/MODEL_DEPTH]` is the model region.
fn refined_bounds(grid: &QuadratureRule) -> Vec<f64> {
    let cut = 1.0 / MODEL_DEPTH as f64;
    let mut pts: Vec<f64> = (1..MODEL_DEPTH).flat_map(|n| [1.0 / n as f64, 2.0 / (2 * n + 1) as f64]).collect();
    pts.extend((2..=FRACTION_DEN).flat_map(|m| (1..m).map(move |k| k as f64 / m as f64)));
    pts.extend(grid.panels.iter().copied().filter(|b| *b > REFINE_BELOW));
    pts.push(1.0);
    pts.retain(|p| *p > cut && *p <= 1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let mut bounds = vec![0.0, cut];
    for p in pts {
        let last = *bounds.last().expect("non-empty");
        let k = ((p - last) / REFINED_MAX_LEN).ceil().max(1.0) as usize;
        bounds.extend((1..=k).map(|i| if i == k { p } else { last + (p - last) * i as f64 / k as f64 }));
    }
    bounds
}

/// Mapped Gauss nodes and weights on every panel of `bounds` but the first.
fn panel_nodes(bounds: &[f64], local: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(local.len() * bounds.len());
    let mut out = Vec::with_capacity(local.len() * bounds.len());
    for w in bounds.windows(2).skip(1) {
        let (m, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (t, wt) in local.iter().zip(weights) {
            nodes.push(m + r * t);
            out.push(r * wt);
        }
    }
    (nodes, out)
}

const FRACTION_DEN: u64 = 12;
/// Number of iterate-and-interpolate passes for handles built from nodes.
const SLOAN_PASSES: usize = 2;
const REFINED_MAX_LEN: f64 = 0.01;
const REFINED_ORDER: usize = 8;

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        domain(format!("eigenfunctions live on [0, 1], got x = {x}"))
    }
}

/// Rays `y = (k/m)x`, `k, m ≤ 3`, along which `∂K₂` jumps and which are
/// resolved by product integration in [`assemble_k2`].
const K2_KINK_DEN: u64 = 8;
/// Gauss order on each side of a resolved kink.
const K2_KINK_ORDER: usize = 8;

/// Symmetrised operator matrix of `K₂` on `grid`, built from the closed form.
///
/// `K₂` is continuous away from the origin, but its derivative jumps along
/// the lines `x = 1/n` (aligned with the spectral grid) and along the rays
/// `x/y = k/m`, strongest for small `k, m`. Row `i` uses the point rule
/// `wⱼK₂(xᵢ, yⱼ)` except on panels crossed by a ray with `k, m ≤ 3`, where
/// `∫K₂(xᵢ, y)ℓⱼ(y)dy` is integrated on both sides of the kink. The result
/// `W^{1/2} A W^{−1/2}` is symmetrised.
pub fn assemble_k2(grid: &QuadratureRule) -> Result<Vec<f64>> {
    let q = grid.order;
    let n = grid.len();
    if n != q * grid.panel_count() {
        return domain("K2 assembly needs a composite rule with one order per panel");
    }
    let local = &gauss_legendre(q)?.nodes;
    let sub = gauss_legendre(K2_KINK_ORDER)?;
    let eval = K2Evaluator::default();
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let points: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| eval.closed_unchecked(grid.nodes[i], grid.nodes[j])).collect())
        .collect();
    let mut a = vec![0.0; n * n];
    for (i, row) in points.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            let j = i + off;
            a[i * n + j] = sw[i] * sw[j] * v;
            a[j * n + i] = sw[i] * sw[j] * v;
        }
    }
    let corrections: Vec<Vec<(usize, Vec<f64>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.nodes[i];
            let mut kinks: Vec<(usize, f64)> = Vec::new();
            for k in 1..=K2_KINK_DEN {
                for m in 1..=K2_KINK_DEN {
                    if crate::resonance::gcd(k, m) != 1 {
                        continue;
                    }
                    let y = x * k as f64 / m as f64;
                    if y >= 1.0 {
                        continue;
                    }
                    let p = grid.panel_of(y);
                    let (lo, hi) = (grid.panels[p], grid.panels[p + 1]);
                    if y - lo > 1e-9 * (hi - lo) && hi - y > 1e-9 * (hi - lo) {
                        kinks.push((p, y));
                    }
                }
            }
            kinks.sort_by(|a, b| a.1.total_cmp(&b.1));
            let mut out = Vec::new();
            let mut start = 0;
            while start < kinks.len() {
                let p = kinks[start].0;
                let mut end = start;
                while end < kinks.len() && kinks[end].0 == p {
                    end += 1;
                }
                let (lo, hi) = (grid.panels[p], grid.panels[p + 1]);
                let mut cuts = vec![lo];
                cuts.extend(kinks[start..end].iter().map(|k| k.1));
                cuts.push(hi);
                let mut ints = vec![0.0; q];
                let mut l = vec![0.0; q];
                for w in cuts.windows(2) {
                    let (half, mid) = (0.5 * (w[1] - w[0]), 0.5 * (w[1] + w[0]));
                    for (t, wt) in sub.nodes.iter().zip(&sub.weights) {
                        let y = mid + half * t;
                        lagrange(local, (2.0 * y - lo - hi) / (hi - lo), &mut l);
                        let k2 = wt * half * eval.closed_unchecked(x, y);
                        for (s, lj) in ints.iter_mut().zip(&l) {
                            *s += k2 * lj;
                        }
                    }
                }
                out.push((p, ints));
                start = end;
            }
            out
        })
        .collect();
    for (i, row) in corrections.iter().enumerate() {
        for (p, ints) in row {
            for (jl, v) in ints.iter().enumerate() {
                let j = p * q + jl;
                a[i * n + j] = sw[i] * v / sw[j];
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    Ok(a)
}

/// One row of the `K` versus `K₂` comparison.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrossValidationEntry {
    pub j: usize,
    /// `1/λⱼ²` from the `K` spectrum.
    pub from_k: f64,
    /// `j`-th largest eigenvalue of the `K₂` operator.
    pub from_k2: f64,
    pub relative: f64,
}

/// Result of [`cross_validate_k2`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct K2CrossValidation {
    pub entries: Vec<CrossValidationEntry>,
    /// Smallest eigenvalue of the `K₂` matrix (should be ≥ 0 up to noise).
    pub min_k2_eigenvalue: f64,
    /// Partial sums `Σ_{h≤H} μₕ` of the `K₂` eigenvalues, `H = 1..=count`.
    pub trace_partial_sums: Vec<f64>,
    /// `∫₀¹ K₂(x, x) dx = ∥K∥²_HS`.
    pub trace: f64,
}

/// Compare the leading `count` values `1/λⱼ²` of the `K` spectrum on `grid`
/// (Galerkin) with the eigenvalues of the point-Nyström `K₂` operator built
/// from the closed form.
pub fn cross_validate_k2(grid: &QuadratureRule, count: usize) -> Result<K2CrossValidation> {
    let mut spectrum = eigensolve(&assemble_galerkin(grid)?, DEFAULT_JACOBI_TOL)?;
    spectrum.refine_leading()?;
    cross_validate_spectrum(&spectrum, count)
}

/// As [`cross_validate_k2`], reusing an already computed `K` spectrum; the
/// `K₂` operator is assembled on the spectrum's grid.
pub fn cross_validate_spectrum(spectrum: &Spectrum, count: usize) -> Result<K2CrossValidation> {
    let grid = &*spectrum.grid;
    let eig = jacobi(assemble_k2(grid)?, grid.len(), DEFAULT_JACOBI_TOL)?;
    let mut mu = eig.values;
    mu.sort_by(|a, b| b.total_cmp(a));
    let min_k2_eigenvalue = mu.last().copied().unwrap_or(0.0);
    let count = count.min(spectrum.len()).min(mu.len());
    let mut from_k: Vec<f64> = spectrum.eigenvalues.iter().map(|l| 1.0 / (l * l)).collect();
    from_k.sort_by(|a, b| b.total_cmp(a));
    let entries = (0..count)
        .map(|i| CrossValidationEntry {
            j: i + 1,
            from_k: from_k[i],
            from_k2: mu[i],
            relative: (from_k[i] - mu[i]).abs() / mu[i].abs(),
        })
        .collect();
    let trace_partial_sums = mu
        .iter()
        .take(count)
        .scan(0.0, |acc, m| {
            *acc += m;
            Some(*acc)
        })
        .collect();
    Ok(K2CrossValidation { entries, min_k2_eigenvalue, trace_partial_sums, trace: hs_norm_squared() })
}


/// Sup-residuals of the bilinear expansion
/// `K₂(x, y) − Σ_{h≤H} φₕ(x)φₕ(y)/λₕ²` over the tensor grid `points²`,
/// one value per truncation `H` in `truncations`.
pub fn bilinear_residuals(spectrum: &Spectrum, points: &[f64], truncations: &[usize]) -> Result<Vec<f64>> {
    let h_max = truncations.iter().copied().max().unwrap_or(0);
    let mut values = Vec::with_capacity(h_max);
    for j in 1..=h_max {
        let h = eigenfunction(spectrum, j)?;
        let l2 = h.eigenvalue() * h.eigenvalue();
        let phi = points.iter().map(|&x| h.evaluate(x)).collect::<Result<Vec<f64>>>()?;
        values.push((phi, l2));
    }
    let eval = K2Evaluator::default();
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let k2: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| eval.closed(points[i], points[j]))
        .collect::<Result<Vec<f64>>>()?;
    Ok(truncations
        .iter()
        .map(|&big_h| {
            pairs
                .iter()
                .zip(&k2)
                .map(|(&(i, j), k)| {
                    let sum: f64 = values[..big_h].iter().map(|(phi, l2)| phi[i] * phi[j] / l2).sum();
                    (k - sum).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

/// `Σ_{h≤H} φₕ(x)²/λₕ²`, the partial sum of the diagonal `K₂(x, x)`.
pub fn diagonal_partial_sum(spectrum: &Spectrum, x: f64, truncation: usize) -> Result<f64> {
    let mut total = 0.0;
    for j in 1..=truncation {
        let h = eigenfunction(spectrum, j)?;
        let v = h.evaluate(x)?;
        total += v * v / (h.eigenvalue() * h.eigenvalue());
    }
    Ok(total)
}
