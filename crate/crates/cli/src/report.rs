//! Run reports and the ROC plot.

use std::fmt::Write as _;

use fglasso::graph::roc_envelope;
use fglasso::{AdmmSolution, RocCurve};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Solver and estimator settings as they were used, defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub manifest: String,
    pub epsilon: f64,
    /// True when `epsilon` was not given and the default rule chose it.
    pub epsilon_is_default: bool,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_lambdas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_min_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaDiagnostics {
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub kkt_gap: f64,
    pub dual_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub edges: usize,
}

impl From<&AdmmSolution> for LambdaDiagnostics {
    fn from(s: &AdmmSolution) -> Self {
        Self {
            lambda: s.lambda,
            iterations: s.iterations,
            converged: s.converged,
            objective: s.objective,
            kkt_gap: s.kkt_gap,
            dual_gap: s.dual_gap,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
            edges: s.edge_count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub config: ConfigEcho,
    pub n: usize,
    pub p: usize,
    pub dim: usize,
    pub lambda_max: f64,
    pub runs: Vec<LambdaDiagnostics>,
    /// Wall-clock seconds; only recorded on request so that reports stay
    /// reproducible by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.runs.iter().all(|r| r.converged)
    }
}

/// Staircase plot of the ROC envelope with the chance diagonal.
pub fn roc_svg(curve: &RocCurve) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    let x = |v: f64| PAD + v * SIZE;
    let y = |v: f64| PAD + (1.0 - v) * SIZE;
    let env = roc_envelope(&curve.points);
    let mut path = String::new();
    let mut prev: Option<(f64, f64)> = None;
    for &(f, t) in &env {
        match prev {
            None => write!(path, "M{:.2},{:.2}", x(f), y(t)).unwrap(),
            Some((_, pt)) => write!(path, " L{:.2},{:.2} L{:.2},{:.2}", x(f), y(pt), x(f), y(t)).unwrap(),
        }
        prev = Some((f, t));
    }
    let total = SIZE + 2.0 * PAD;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    )
    .unwrap();
    writeln!(
        s,
        r#"<path d="{path}" fill="none" stroke="steelblue" stroke-width="2"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">FPR</text>"#,
        x(0.5),
        total - 10.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">TPR</text>"#,
        y(0.5),
        y(0.5)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}">AUC = {:.4}</text>"#,
        x(0.6),
        y(0.08),
        curve.auc
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}
