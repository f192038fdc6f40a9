//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use crate::error::{Error, Result};

/// Sweep limit before reporting non-convergence.
pub(crate) const MAX_SWEEPS: usize = 100;

/// Eigenvalues and eigenvectors (`vectors[k]` belongs to `values[k]`).
#[derive(Debug, Clone)]
pub(crate) struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Diagonalise the symmetric `n × n` row-major matrix `a` by cyclic Jacobi
/// rotations until the off-diagonal Frobenius norm falls below `tol`.
pub(crate) fn jacobi(mut a: Vec<f64>, n: usize, tol: f64) -> Result<Eigen> {
    // vt holds Vᵀ, so that the two eigenvector columns touched by a rotation
    // are contiguous rows.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let mut off = off_norm(&a, n);
    let mut sweeps = 0;
    while off >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { iterations: sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Negligible against both diagonal entries: annihilate.
                if sweeps > 3 && apq.abs() < 1e-18 * app.abs().min(aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, n, p, q, c, s);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                let (rp, rq) = rows_mut(&mut vt, n, p, q);
                for k in 0..n {
                    let (vp, vq) = (rp[k], rq[k]);
                    rp[k] = c * vp - s * vq;
                    rq[k] = s * vp + c * vq;
                }
            }
        }
        off = off_norm(&a, n);
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = vt.chunks(n).map(<[f64]>::to_vec).collect();
    Ok(Eigen { values, vectors })
}

/// Apply the rotation in the `(p, q)` plane to rows and columns `p`, `q`
/// (the diagonal block is fixed up by the caller).
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (rp, rq) = rows_mut(a, n, p, q);
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let (x, y) = (rp[k], rq[k]);
        rp[k] = c * x - s * y;
        rq[k] = s * x + c * y;
    }
    for k in 0..n {
        if k != p && k != q {
            a[k * n + p] = a[p * n + k];
            a[k * n + q] = a[q * n + k];
        }
    }
}

fn rows_mut(a: &mut [f64], n: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (head, tail) = a.split_at_mut(q * n);
    (&mut head[p * n..p * n + n], &mut tail[..n])
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonalises_small_symmetric_matrix() {
        let a = vec![4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 1.0];
        let e = jacobi(a.clone(), 3, 1e-14).unwrap();
        for (lam, v) in e.values.iter().zip(&e.vectors) {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i * 3 + j] * v[j]).sum();
                assert!((av - lam * v[i]).abs() < 1e-12);
            }
        }
        let trace: f64 = e.values.iter().sum();
        assert!((trace - 8.0).abs() < 1e-12);
    }
}
