//! Gauss–Legendre rules, composite panel rules on `[0, 1]`, and the
//! breakpoint sets along which rows of the kernel jump.

use std::sync::OnceLock;

use crate::error::{domain, Result};

/// Maximum supported number of Gauss points per panel.
pub const MAX_ORDER: usize = 64;

/// Gauss–Legendre rule on `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Integrate `f` over `[a, b]` with this rule.
    #[inline]
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut s = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * t);
        }
        s * half
    }
}

/// The `order`-point Gauss–Legendre rule, `1 ≤ order ≤ 64`.
///
/// Nodes are roots of `P_order`, found by Newton's method on the
/// three-term recurrence; the rules are computed once and cached.
pub fn gauss_legendre(order: usize) -> Result<&'static GaussRule> {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    if !(1..=MAX_ORDER).contains(&order) {
        return domain(format!("Gauss-Legendre order must be in 1..={MAX_ORDER}, got {order}"));
    }
    let rules = RULES.get_or_init(|| (1..=MAX_ORDER).map(compute_rule).collect());
    Ok(&rules[order - 1])
}

/// Legendre `P_n(x)` and its derivative via the recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Composite Gauss rule on panels of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Sorted panel boundaries; panel `p` is `[panels[p], panels[p+1]]`.
    pub panels: Vec<f64>,
    /// Gauss points per panel.
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len() - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Index of the panel containing `x` (the last panel for `x = 1`).
    pub fn panel_of(&self, x: f64) -> usize {
        let p = self.panels.partition_point(|b| *b <= x);
        p.clamp(1, self.panels.len() - 1) - 1
    }
}

/// Map the `order`-point Gauss rule into each panel of `boundaries`.
pub fn composite_rule(boundaries: &[f64], order: usize) -> Result<QuadratureRule> {
    if boundaries.len() < 2 {
        return domain("at least two panel boundaries are required");
    }
    if boundaries.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return domain("panel boundaries must lie in [0, 1]");
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return domain("panel boundaries must be strictly increasing");
    }
    let base = gauss_legendre(order)?;
    let mut nodes = Vec::with_capacity(order * (boundaries.len() - 1));
    let mut weights = Vec::with_capacity(nodes.capacity());
    for w in boundaries.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let mid = 0.5 * (w[1] + w[0]);
        for (t, wt) in base.nodes.iter().zip(&base.weights) {
            nodes.push(mid + half * t);
            weights.push(wt * half);
        }
    }
    Ok(QuadratureRule { nodes, weights, panels: boundaries.to_vec(), order })
}

/// `panels` equal panels on `[0, 1]`.
pub fn uniform_grid(panels: usize, order: usize) -> Result<QuadratureRule> {
    if panels == 0 {
        return domain("need at least one panel");
    }
    let b: Vec<f64> = (0..=panels).map(|i| i as f64 / panels as f64).collect();
    composite_rule(&b, order)
}

/// The default spectral grid: panel boundaries at every `1/n` for
/// `n ≤ n₀ = max(1, panels/4)`, where eigenfunctions have derivative jumps;
/// a quarter of the panels cover `[0, 1/(n₀+1)]` uniformly and the rest are
/// spread over the intervals `[1/(n+1), 1/n]` in proportion to
/// `length/√midpoint`.
pub fn spectral_grid(panels: usize, order: usize) -> Result<QuadratureRule> {
    composite_rule(&spectral_boundaries(panels)?, order)
}

pub(crate) fn spectral_boundaries(panels: usize) -> Result<Vec<f64>> {
    if panels == 0 {
        return domain("need at least one panel");
    }
    if panels < 4 {
        return Ok((0..=panels).map(|i| i as f64 / panels as f64).collect());
    }
    let n0 = (panels / 4).max(1);
    let tail = (panels / 4).max(1);
    let rest = panels - tail;
    if rest < n0 {
        return domain("too few panels for the aligned grid");
    }
    let weight: Vec<f64> = (1..=n0)
        .map(|n| {
            let (lo, hi) = (1.0 / (n as f64 + 1.0), 1.0 / n as f64);
            (hi - lo) / (0.5 * (hi + lo)).sqrt()
        })
        .collect();
    let total: f64 = weight.iter().sum();
    let mut count: Vec<usize> = weight
        .iter()
        .map(|w| ((rest as f64 * w / total).round() as usize).max(1))
        .collect();
    while count.iter().sum::<usize>() > rest {
        let i = argmax(&count.iter().map(|c| *c as f64).collect::<Vec<_>>());
        count[i] -= 1;
    }
    while count.iter().sum::<usize>() < rest {
        let ratio: Vec<f64> = weight.iter().zip(&count).map(|(w, c)| w / *c as f64).collect();
        count[argmax(&ratio)] += 1;
    }
    let edge = 1.0 / (n0 as f64 + 1.0);
    let mut b: Vec<f64> = (0..=tail).map(|i| edge * i as f64 / tail as f64).collect();
    for n in (1..=n0).rev() {
        let (lo, hi) = (1.0 / (n as f64 + 1.0), 1.0 / n as f64);
        let k = count[n - 1];
        for i in 1..=k {
            b.push(if i == k { hi } else { lo + (hi - lo) * i as f64 / k as f64 });
        }
    }
    Ok(b)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Points in `(cutoff, 1]` where `y ↦ K(x, y)` jumps, i.e. `z = 1/(mx)`,
/// together with `cutoff` and `1`, sorted ascending.
pub fn kernel_breakpoints(x: f64, cutoff: f64) -> Vec<f64> {
    let mut out = vec![cutoff];
    if x > 0.0 {
        let m_lo = (1.0 / x).ceil().max(1.0) as u64;
        let m_hi = (1.0 / (x * cutoff)).ceil() as u64;
        for m in (m_lo..=m_hi).rev() {
            let z = 1.0 / (m as f64 * x);
            if z > cutoff && z < 1.0 {
                out.push(z);
            }
        }
    }
    out.push(1.0);
    out
}

/// Merge two ascending sequences into one strictly ascending sequence,
/// dropping points closer than `gap` to their predecessor.
pub(crate) fn merge_sorted(a: &[f64], b: &[f64], gap: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let v = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last().is_none_or(|l: &f64| v - l > gap) {
            out.push(v);
        }
    }
    out
}

/// Integrate `f` over consecutive intervals of the ascending list `pts`
/// using an `order`-point rule on each.
pub(crate) fn integrate_panels(pts: &[f64], order: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(order).expect("valid order");
    pts.windows(2).map(|w| rule.integrate(w[0], w[1], &mut f)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_grid_has_requested_size_and_reciprocal_boundaries() {
        let g = spectral_grid(64, 4).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.panel_count(), 64);
        for n in 1..=16 {
            let t = 1.0 / n as f64;
            assert!(g.panels.iter().any(|b| (b - t).abs() < 1e-15), "missing 1/{n}");
        }
    }
}
