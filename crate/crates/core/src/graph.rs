//! Graph extraction and recovery-quality evaluation.

use serde::{Deserialize, Serialize};

use crate::blockmat::BlockLayout;
use crate::error::{Error, Result};
use crate::solver::AdmmSolution;

/// Undirected graph over `p` nodes; every node is adjacent to itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEstimate {
    p: usize,
    adjacency: Vec<bool>,
    /// False when the graph was read from a solver run that did not converge.
    pub from_converged: bool,
}

impl GraphEstimate {
    pub fn empty(p: usize) -> Self {
        let mut adjacency = vec![false; p * p];
        for i in 0..p {
            adjacency[i * p + i] = true;
        }
        Self {
            p,
            adjacency,
            from_converged: true,
        }
    }

    pub fn complete(p: usize) -> Self {
        Self {
            p,
            adjacency: vec![true; p * p],
            from_converged: true,
        }
    }

    /// Builds a graph from 0-based node pairs. Self-loops are ignored.
    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(p);
        for (i, j) in edges {
            if i >= p || j >= p {
                return Err(Error::InvalidInput(format!(
                    "edge ({i}, {j}) out of range for {p} nodes"
                )));
            }
            g.set_edge(i, j, true);
        }
        Ok(g)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.p + j]
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if i == j {
            return;
        }
        self.adjacency[i * self.p + j] = present;
        self.adjacency[j * self.p + i] = present;
    }

    /// Edges as 0-based pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.p)
            .flat_map(|i| ((i + 1)..self.p).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_edge(i, j))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }
}

/// Edge `(i, j)` is present iff block `Z_ij` has a nonzero entry.
pub fn extract_graph(solution: &AdmmSolution, layout: &BlockLayout) -> GraphEstimate {
    assert_eq!(solution.layout(), layout, "solution layout differs");
    let mut g = GraphEstimate::empty(layout.p());
    for (i, j) in layout.upper_pairs() {
        if !solution.z.block_is_zero(i, j) {
            g.set_edge(i, j, true);
        }
    }
    g.from_converged = solution.converged;
    g
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `(tpr, fpr)` over unordered off-diagonal pairs. A rate whose denominator
/// is empty is reported as zero.
pub fn compare(est: &GraphEstimate, truth: &GraphEstimate) -> Result<(f64, f64)> {
    if est.p != truth.p {
        return Err(Error::DimensionMismatch {
            expected: truth.p,
            found: est.p,
        });
    }
    let (mut tp, mut pos, mut fp, mut neg) = (0, 0, 0, 0);
    for i in 0..truth.p {
        for j in (i + 1)..truth.p {
            let found = est.has_edge(i, j);
            if truth.has_edge(i, j) {
                pos += 1;
                tp += found as usize;
            } else {
                neg += 1;
                fp += found as usize;
            }
        }
    }
    Ok((ratio(tp, pos), ratio(fp, neg)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub lambda: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub edges: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// One point per penalty, in path order.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC points for a solved penalty path.
pub fn roc_curve(solutions: &[AdmmSolution], truth: &GraphEstimate) -> Result<RocCurve> {
    if solutions.is_empty() {
        return Err(Error::InvalidInput("empty path".into()));
    }
    let mut points = Vec::with_capacity(solutions.len());
    for s in solutions {
        let g = extract_graph(s, s.layout());
        let (tpr, fpr) = compare(&g, truth)?;
        points.push(RocPoint {
            lambda: s.lambda,
            tpr,
            fpr,
            edges: g.edge_count(),
        });
    }
    Ok(roc_from_points(points))
}

/// Builds a curve from precomputed points.
pub fn roc_from_points(points: Vec<RocPoint>) -> RocCurve {
    let auc = auc(&points);
    RocCurve { points, auc }
}

/// The monotone upper envelope through `(0,0)`, the given points and `(1,1)`,
/// sorted by FPR: for each FPR the best TPR, then a running maximum.
pub fn roc_envelope(points: &[RocPoint]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut env: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (x, y) in pts {
        let y = env.last().map_or(y, |&(_, prev)| y.max(prev));
        match env.last_mut() {
            Some(last) if last.0 == x => last.1 = y,
            _ => env.push((x, y)),
        }
    }
    env
}

/// Trapezoid area under [`roc_envelope`].
pub fn auc(points: &[RocPoint]) -> f64 {
    roc_envelope(points)
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}

/// Averages replicate curves point by point (matched penalty index). The
/// curves must have equal length.
pub fn mean_roc(curves: &[RocCurve]) -> Result<RocCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidInput("no curves to average".into()))?;
    let len = first.points.len();
    if let Some(bad) = curves.iter().find(|c| c.points.len() != len) {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: bad.points.len(),
        });
    }
    let m = curves.len() as f64;
    let points = (0..len)
        .map(|k| {
            let (mut lambda, mut tpr, mut fpr, mut edges) = (0.0, 0.0, 0.0, 0.0);
            for c in curves {
                let p = &c.points[k];
                lambda += p.lambda;
                tpr += p.tpr;
                fpr += p.fpr;
                edges += p.edges as f64;
            }
            RocPoint {
                lambda: lambda / m,
                tpr: tpr / m,
                fpr: fpr / m,
                edges: (edges / m).round() as usize,
            }
        })
        .collect();
    Ok(roc_from_points(points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(tpr: f64, fpr: f64) -> RocPoint {
        RocPoint {
            lambda: 0.0,
            tpr,
            fpr,
            edges: 0,
        }
    }

    #[test]
    fn compare_examples() {
        let truth = GraphEstimate::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(compare(&truth, &truth).unwrap(), (1.0, 0.0));
        assert_eq!(compare(&GraphEstimate::empty(4), &truth).unwrap(), (0.0, 0.0));
        assert_eq!(compare(&GraphEstimate::complete(4), &truth).unwrap(), (1.0, 1.0));
        assert!(compare(&GraphEstimate::empty(3), &truth).is_err());
    }

    #[test]
    fn partial_recovery_rates() {
        let truth = GraphEstimate::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let est = GraphEstimate::from_edges(4, [(0, 1), (0, 2)]).unwrap();
        assert_eq!(compare(&est, &truth).unwrap(), (0.5, 0.25));
    }

    #[test]
    fn graph_is_symmetric_with_self_loops() {
        let g = GraphEstimate::from_edges(3, [(2, 0)]).unwrap();
        assert!(g.has_edge(0, 2) && g.has_edge(2, 0));
        assert!((0..3).all(|i| g.has_edge(i, i)));
        assert_eq!(g.edges(), vec![(0, 2)]);
        assert!(GraphEstimate::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[pt(1.0, 0.0)]), 1.0);
        assert_eq!(auc(&[pt(0.0, 0.0)]), 0.5);
        assert_eq!(auc(&[pt(1.0, 1.0)]), 0.5);
        // staircase (0,0) → (0.5, 0.5)… with a dominated point ignored
        let a = auc(&[pt(0.8, 0.2), pt(0.6, 0.3), pt(1.0, 0.6)]);
        let expected = 0.2 * 0.4 + 0.1 * 0.8 + 0.3 * 0.9 + 0.4 * 1.0;
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn envelope_is_monotone() {
        let env = roc_envelope(&[pt(0.9, 0.1), pt(0.5, 0.4), pt(0.95, 0.4)]);
        assert!(env.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(env.first(), Some(&(0.0, 0.0)));
        assert_eq!(env.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn mean_of_identical_curves() {
        let c = roc_from_points(vec![pt(0.5, 0.1), pt(0.9, 0.3)]);
        let m = mean_roc(&[c.clone(), c.clone()]).unwrap();
        assert_eq!(m.points, c.points);
        assert!(mean_roc(&[c, roc_from_points(vec![pt(1.0, 0.0)])]).is_err());
    }
}
