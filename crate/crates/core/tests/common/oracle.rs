//! Slow reference minimizer for the penalized log-determinant problem.
//!
//! Proximal gradient with backtracking. Inverses and log-determinants come
//! from Cholesky factorizations, so nothing here shares code with the ADMM
//! solver or its eigendecompositions.

#![allow(dead_code)]

use nalgebra::{Cholesky, DMatrix};

/// Node sizes of a block layout; block `i` spans `offsets[i]..offsets[i] + sizes[i]`.
pub struct Blocks {
    pub sizes: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl Blocks {
    pub fn new(sizes: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in sizes {
            offsets.push(acc);
            acc += s;
        }
        Self {
            sizes: sizes.to_vec(),
            offsets,
        }
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }
}

/// `tr(QR) − log det Q`, or `None` when `Q` is not positive definite.
pub fn smooth(q: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(q.clone())?;
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Some((q * r).trace() - logdet)
}

/// `Σ_{i≠j} ‖Q_ij‖_F`, both triangles.
pub fn penalty(q: &DMatrix<f64>, b: &Blocks) -> f64 {
    let mut s = 0.0;
    for i in 0..b.sizes.len() {
        for j in 0..b.sizes.len() {
            if i != j {
                s += q.view((b.offsets[i], b.offsets[j]), (b.sizes[i], b.sizes[j])).norm();
            }
        }
    }
    s
}

pub fn full_objective(q: &DMatrix<f64>, r: &DMatrix<f64>, b: &Blocks, lambda: f64) -> f64 {
    smooth(q, r).unwrap_or(f64::INFINITY) + lambda * penalty(q, b)
}

fn prox(mut a: DMatrix<f64>, b: &Blocks, t: f64) -> DMatrix<f64> {
    for i in 0..b.sizes.len() {
        for j in 0..b.sizes.len() {
            if i == j {
                continue;
            }
            let mut blk = a.view_mut((b.offsets[i], b.offsets[j]), (b.sizes[i], b.sizes[j]));
            let norm = blk.norm();
            let scale = if norm > t { 1.0 - t / norm } else { 0.0 };
            blk *= scale;
        }
    }
    a
}

/// Minimizes `tr(QR) − log det Q + λ Σ_{i≠j} ‖Q_ij‖_F` to high precision.
pub fn minimize(r: &DMatrix<f64>, b: &Blocks, lambda: f64) -> DMatrix<f64> {
    let n = r.nrows();
    let mut q = DMatrix::identity(n, n);
    let mut t = 1.0;
    for _ in 0..200_000 {
        let chol = Cholesky::new(q.clone()).expect("iterate stays positive definite");
        let grad = r - chol.inverse();
        let f = smooth(&q, r).unwrap();
        let mut step = t;
        let next = loop {
            let cand = prox(&q - &grad * step, b, step * lambda);
            let cand = (&cand + cand.transpose()) * 0.5;
            if let Some(fc) = smooth(&cand, r) {
                let d = &cand - &q;
                if fc <= f + grad.dot(&d) + d.norm_squared() / (2.0 * step) + 1e-15 * f.abs() {
                    break cand;
                }
            }
            step *= 0.5;
            assert!(step > 1e-20, "backtracking failed");
        };
        let moved = (&next - &q).norm() / step;
        q = next;
        t = (step * 2.0).min(10.0);
        if moved < 1e-11 {
            break;
        }
    }
    q
}
