//! ADMM for the discretized functional graphical lasso.
//!
//! Minimizes `F̃(Q) = tr[QR] − log det Q + λ ‖Q − D∘Q‖_{2,1}` over `Q ≻ 0`,
//! where `R = I_K + M^{1/2} R₀ M^{1/2}` and `Q = I_K + M^{1/2} H M^{1/2}`.
//! The splitting `Q = Z` puts the log-determinant in the `Q`-step (solved in
//! closed form through one symmetric eigendecomposition) and the group
//! penalty in the `Z`-step (blockwise soft-thresholding). Sparsity is read
//! off `Z`, whose pruned blocks are exactly zero.

use log::{debug, trace};
use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::blockmat::{self, BlockLayout, BlockMatrix, MassMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};

/// Tolerance on `‖R − Rᵀ‖_F / ‖R‖_F` accepted by the solver.
const INPUT_SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub rho: f64,
    /// Threshold on the relative primal residual `‖Q − Z‖_F / ‖Q‖_F` and
    /// on the dual residual, the largest block of `ρ(Zᵐ − Zᵐ⁻¹)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            rho: 1.0,
            tol: 1e-4,
            max_iter: 2000,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho must be > 0, got {}", self.rho)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of one ADMM run.
#[derive(Clone, Debug)]
pub struct AdmmSolution {
    pub lambda: f64,
    /// Positive definite precision estimate in mass-weighted coordinates.
    pub q: BlockMatrix,
    /// Group-sparse copy of `Q`; carries the graph.
    pub z: BlockMatrix,
    /// Scaled dual variable.
    pub u: BlockMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// `F̃(Q)`.
    pub objective: f64,
    pub kkt_gap: f64,
    pub dual_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl AdmmSolution {
    pub fn layout(&self) -> &BlockLayout {
        self.q.layout()
    }

    /// Number of node pairs `i < j` whose `Z` block is not exactly zero.
    pub fn edge_count(&self) -> usize {
        self.layout()
            .upper_pairs()
            .filter(|&(i, j)| !self.z.block_is_zero(i, j))
            .count()
    }

    /// `H = M^{-1/2} (Q − I_K) M^{-1/2}`, the precision operator estimate.
    pub fn precision_operator(&self, mass: &MassMatrix) -> BlockMatrix {
        mass.unweigh(&shift_identity(&self.q, -1.0))
    }

    /// Same change of variables applied to the sparse iterate `Z`.
    pub fn sparse_precision_operator(&self, mass: &MassMatrix) -> BlockMatrix {
        mass.unweigh(&shift_identity(&self.z, -1.0))
    }
}

fn shift_identity(a: &BlockMatrix, by: f64) -> BlockMatrix {
    let mut data = a.data().clone();
    for i in 0..data.nrows() {
        data[(i, i)] += by;
    }
    BlockMatrix::from_parts(a.layout().clone(), data, a.is_symmetric())
}

/// Sum of Frobenius norms of the off-diagonal blocks, unweighted.
fn off_diagonal_group_norm(a: &BlockMatrix) -> f64 {
    2.0 * a
        .layout()
        .upper_pairs()
        .map(|(i, j)| a.block_frobenius(i, j))
        .sum::<f64>()
}

/// `tr[QR] − log det Q`, or `+∞` when `Q` is not positive definite.
pub fn smooth_objective(q: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
    match blockmat::sym_logdet(q) {
        Ok(logdet) => q.dot(r) - logdet,
        Err(_) => f64::INFINITY,
    }
}

/// `F̃(Q) = tr[QR] − log det Q + λ ‖Q − D∘Q‖_{2,1}`, extended by `+∞`
/// outside the positive definite cone.
pub fn objective(q: &BlockMatrix, r: &BlockMatrix, lambda: f64) -> f64 {
    assert_eq!(q.layout(), r.layout(), "layouts differ");
    let smooth = smooth_objective(q.data(), r.data());
    if smooth.is_infinite() {
        return smooth;
    }
    smooth + lambda * off_diagonal_group_norm(q)
}

/// The objective on the operator scale, `F[H] = F̃(Q) − tr R`.
///
/// `F̃` drops the constant `tr R`, which grows with the resolution; adding it
/// back gives a value comparable across discretizations.
pub fn operator_objective(q: &BlockMatrix, r: &BlockMatrix, lambda: f64) -> f64 {
    objective(q, r, lambda) - r.trace()
}

/// Positive root of `ρq − 1/q = γ`.
pub fn q_eigenvalue(gamma: f64, rho: f64) -> f64 {
    let disc = (gamma * gamma + 4.0 * rho).sqrt();
    if gamma >= 0.0 {
        (gamma + disc) / (2.0 * rho)
    } else {
        // rationalized to avoid cancellation
        2.0 / (disc - gamma)
    }
}

/// Solves `ρQ − Q^{-1} = V` for symmetric `V` by matching eigenvalues.
pub fn q_update(v: &BlockMatrix, rho: f64) -> Result<BlockMatrix> {
    let eig = SymEigen::new(v.data())?;
    Ok(BlockMatrix::from_parts(
        v.layout().clone(),
        eig.map(|g| q_eigenvalue(g, rho)),
        true,
    ))
}

/// Group soft-thresholding `S_t(B) = (1 − t/‖B‖_F)₊ B`.
pub fn group_soft_threshold(b: DMatrixView<'_, f64>, t: f64) -> DMatrix<f64> {
    assert!(t >= 0.0, "threshold must be non-negative");
    let norm = b.norm();
    if norm <= t {
        DMatrix::zeros(b.nrows(), b.ncols())
    } else {
        b * (1.0 - t / norm)
    }
}

/// Largest off-diagonal block Frobenius norm of `R`: the smallest penalty
/// whose solution is block diagonal.
pub fn lambda_max(r: &BlockMatrix) -> f64 {
    r.layout()
        .upper_pairs()
        .map(|(i, j)| r.block_frobenius(i, j))
        .fold(0.0, f64::max)
}

/// `n` log-spaced penalties from `lambda_max` down to `lambda_max * min_ratio`.
pub fn default_lambda_grid(lambda_max: f64, n: usize, min_ratio: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lambda_max],
        _ => {
            let step = min_ratio.ln() / (n - 1) as f64;
            (0..n).map(|k| lambda_max * (step * k as f64).exp()).collect()
        }
    }
}

fn check_problem(r: &BlockMatrix, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    let asym = r.asymmetry();
    if asym > INPUT_SYMMETRY_TOL {
        return Err(Error::InvalidInput(format!(
            "R is not symmetric (relative asymmetry {asym:e})"
        )));
    }
    if r.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("R has non-finite entries".into()));
    }
    Ok(())
}

/// Runs ADMM from `Z⁰ = U⁰ = D∘R`, or from the `Z`, `U` of `warm_start`.
///
/// Returns [`Error::MaxIterationsExceeded`] carrying the last iterate when
/// the residual does not reach `config.tol`.
pub fn admm_solve(r: &BlockMatrix, config: &SolverConfig, warm_start: Option<&AdmmSolution>) -> Result<AdmmSolution> {
    check_problem(r, config)?;
    let (z0, u0) = match warm_start {
        Some(prev) => {
            if prev.z.layout() != r.layout() {
                return Err(Error::InvalidInput("warm start layout differs from R".into()));
            }
            (prev.z.clone(), prev.u.clone())
        }
        None => {
            let d = blockmat::diag_mask(r);
            (d.clone(), d)
        }
    };
    admm_solve_from(r, config, z0, u0)
}

/// Runs ADMM from an explicit starting pair `(Z⁰, U⁰)`.
pub fn admm_solve_from(
    r: &BlockMatrix,
    config: &SolverConfig,
    z0: BlockMatrix,
    u0: BlockMatrix,
) -> Result<AdmmSolution> {
    check_problem(r, config)?;
    if z0.layout() != r.layout() || u0.layout() != r.layout() {
        return Err(Error::InvalidInput("starting point layout differs from R".into()));
    }
    let layout = r.layout().clone();
    let rho = config.rho;
    let threshold = config.lambda / rho;

    let mut z = z0.into_data();
    let mut u = u0.into_data();
    linalg::symmetrize_in_place(&mut z);
    linalg::symmetrize_in_place(&mut u);

    let mut q = DMatrix::zeros(0, 0);
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;

        let v = (&z - &u) * rho - r.data();
        q = SymEigen::new(&v)?.map(|g| q_eigenvalue(g, rho));

        let z_prev = std::mem::replace(&mut z, &q + &u);
        shrink_off_diagonal(&mut z, &layout, threshold);
        debug_assert!(blockmat::relative_asymmetry(&z) <= 1e-10);

        u += &q - &z;

        primal = (&q - &z).norm() / q.norm();
        dual = rho * max_block_norm(&(&z - &z_prev), &layout);
        trace!("admm iter {iterations}: primal {primal:.3e} dual {dual:.3e}");

        // The primal residual alone is not enough: at λ = 0 the Z-step copies
        // Q + U, U vanishes after one step, and Q = Z long before Q^{-1} = R.
        // The Q-step gives R − Q^{-1} = ρ(Zᵐ⁻¹ − Zᵐ) − ρUᵐ with −ρUᵐ a
        // subgradient at Zᵐ, so the dual residual bounds the KKT violation.
        if primal <= config.tol && dual <= config.tol {
            converged = true;
            break;
        }
    }

    let q = BlockMatrix::from_parts(layout.clone(), q, true);
    let z = BlockMatrix::from_parts(layout.clone(), z, true);
    let u = BlockMatrix::from_parts(layout, u, true);
    let diag = diagnostics(&q, &z, r, config.lambda)?;

    let solution = AdmmSolution {
        lambda: config.lambda,
        q,
        z,
        u,
        iterations,
        converged,
        objective: diag.objective,
        kkt_gap: diag.kkt,
        dual_gap: diag.dual_gap,
        primal_residual: primal,
        dual_residual: dual,
    };
    debug!(
        "admm lambda={:.4e}: {} iterations, converged={}, edges={}, kkt={:.2e}, dual gap={:.2e}",
        config.lambda,
        iterations,
        converged,
        solution.edge_count(),
        diag.kkt,
        diag.dual_gap
    );
    if converged {
        Ok(solution)
    } else {
        Err(Error::MaxIterationsExceeded {
            iterations,
            residual: primal.max(dual),
            best: Box::new(solution),
        })
    }
}

/// `Z`-step: off-diagonal blocks are soft-thresholded, diagonal blocks kept.
/// Only the upper blocks are computed; the lower ones are their transposes,
/// so a symmetric input stays bitwise symmetric.
fn shrink_off_diagonal(z: &mut DMatrix<f64>, layout: &BlockLayout, t: f64) {
    for (i, j) in layout.upper_pairs() {
        let (ri, cj) = (layout.offset(i), layout.offset(j));
        let (ni, nj) = (layout.size(i), layout.size(j));
        let norm = z.view((ri, cj), (ni, nj)).norm();
        if norm <= t {
            z.view_mut((ri, cj), (ni, nj)).fill(0.0);
            z.view_mut((cj, ri), (nj, ni)).fill(0.0);
        } else {
            let scale = 1.0 - t / norm;
            z.view_mut((ri, cj), (ni, nj)).scale_mut(scale);
            for a in 0..ni {
                for b in 0..nj {
                    z[(cj + b, ri + a)] = z[(ri + a, cj + b)];
                }
            }
        }
    }
}

fn max_block_norm(a: &DMatrix<f64>, layout: &BlockLayout) -> f64 {
    let p = layout.p();
    let mut worst: f64 = 0.0;
    for i in 0..p {
        for j in i..p {
            let b = a.view((layout.offset(i), layout.offset(j)), (layout.size(i), layout.size(j)));
            worst = worst.max(b.norm());
        }
    }
    worst
}

struct Diagnostics {
    objective: f64,
    kkt: f64,
    dual_gap: f64,
}

fn diagnostics(q: &BlockMatrix, z: &BlockMatrix, r: &BlockMatrix, lambda: f64) -> Result<Diagnostics> {
    let eig = SymEigen::new(q.data())?;
    if eig.min_value() <= 0.0 {
        return Ok(Diagnostics {
            objective: f64::INFINITY,
            kkt: f64::INFINITY,
            dual_gap: f64::INFINITY,
        });
    }
    let logdet: f64 = eig.values().iter().map(|v| v.ln()).sum();
    let objective = q.data().dot(r.data()) - logdet + lambda * off_diagonal_group_norm(q);
    let q_inv = eig.map(|v| 1.0 / v);
    Ok(Diagnostics {
        objective,
        kkt: stationarity_violation(z, r, &q_inv, lambda),
        dual_gap: dual_violation(r, &q_inv, lambda),
    })
}

fn stationarity_violation(z: &BlockMatrix, r: &BlockMatrix, q_inv: &DMatrix<f64>, lambda: f64) -> f64 {
    let layout = r.layout();
    let grad = r.data() - q_inv;
    let grad = BlockMatrix::from_parts(layout.clone(), grad, true);
    let mut worst: f64 = 0.0;
    for i in 0..layout.p() {
        for j in i..layout.p() {
            let g = grad.block(i, j);
            let v = if i == j {
                g.norm()
            } else if z.block_is_zero(i, j) {
                (g.norm() - lambda).max(0.0)
            } else {
                let zb = z.block(i, j);
                (g + zb * (lambda / zb.norm())).norm()
            };
            worst = worst.max(v);
        }
    }
    worst
}

fn dual_violation(r: &BlockMatrix, q_inv: &DMatrix<f64>, lambda: f64) -> f64 {
    let layout = r.layout();
    let diff = BlockMatrix::from_parts(layout.clone(), q_inv - r.data(), true);
    let worst = layout
        .upper_pairs()
        .map(|(i, j)| diff.block_frobenius(i, j))
        .fold(0.0, f64::max);
    (worst - lambda).max(0.0)
}

fn inverse(q: &BlockMatrix) -> Result<DMatrix<f64>> {
    let eig = SymEigen::new(q.data())?;
    if eig.min_value() <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: eig.min_value(),
        });
    }
    Ok(eig.map(|v| 1.0 / v))
}

/// Largest blockwise violation of `R − Q^{-1} + λΓ = 0`, where `Γ` is a
/// subgradient of the off-diagonal group norm taken at the sparse iterate:
/// `Z_ij/‖Z_ij‖_F` on blocks kept in `Z`, any block of norm at most one on
/// pruned blocks.
pub fn kkt_residual(solution: &AdmmSolution, r: &BlockMatrix, lambda: f64) -> Result<f64> {
    let q_inv = inverse(&solution.q)?;
    Ok(stationarity_violation(&solution.z, r, &q_inv, lambda))
}

/// `max(0, ‖offdiag(Q^{-1} − R)‖_{2,∞} − λ)`: how far `Q^{-1}` is from the
/// dual feasible set.
pub fn dual_feasibility_gap(solution: &AdmmSolution, r: &BlockMatrix, lambda: f64) -> Result<f64> {
    let q_inv = inverse(&solution.q)?;
    Ok(dual_violation(r, &q_inv, lambda))
}

/// Solves along a strictly descending penalty sequence, warm starting each
/// solve from its predecessor.
///
/// Non-convergence at one penalty does not stop the path: its last iterate
/// is kept (with `converged == false`) and seeds the next solve.
pub fn lambda_path(r: &BlockMatrix, lambdas: &[f64], config: &SolverConfig) -> Result<Vec<AdmmSolution>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("empty penalty sequence".into()));
    }
    if lambdas.iter().any(|&l| !(l.is_finite() && l >= 0.0)) {
        return Err(Error::InvalidInput("penalties must be finite and >= 0".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("penalties must be strictly descending".into()));
    }
    let mut out: Vec<AdmmSolution> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let cfg = SolverConfig { lambda, ..*config };
        let solution = match admm_solve(r, &cfg, out.last()) {
            Ok(s) => s,
            Err(Error::MaxIterationsExceeded { best, .. }) => *best,
            Err(e) => return Err(e),
        };
        out.push(solution);
    }
    Ok(out)
}
