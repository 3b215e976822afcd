//! Covariance estimation and the regularized correlation operator matrix.

use nalgebra::DMatrix;

use crate::blockmat::{BlockLayout, BlockMatrix, MassMatrix};
use crate::error::{Error, Result};
use crate::linalg::SymEigen;

/// `n` discretized observations, one per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    layout: BlockLayout,
    data: DMatrix<f64>,
}

impl SampleSet {
    pub fn new(layout: BlockLayout, data: DMatrix<f64>) -> Result<Self> {
        if data.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: data.ncols(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let rows = data.nrows().max(1);
            return Err(Error::InvalidInput(format!(
                "non-finite value in sample {} column {}",
                pos % rows,
                pos / rows
            )));
        }
        Ok(Self { layout, data })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }
}

/// Source of a covariance estimate. The solver only ever sees the resulting
/// [`BlockMatrix`], so other estimators can be dropped in here.
pub trait CovarianceEstimator {
    fn estimate(&self, samples: &SampleSet) -> Result<BlockMatrix>;
}

/// The mean-centered empirical covariance `(1/n) Σ X_k X_kᵀ − X̄ X̄ᵀ`.
#[derive(Clone, Copy, Debug, Default)]
pub struct EmpiricalCovariance;

impl CovarianceEstimator for EmpiricalCovariance {
    fn estimate(&self, samples: &SampleSet) -> Result<BlockMatrix> {
        empirical_covariance(samples)
    }
}

pub fn empirical_covariance(samples: &SampleSet) -> Result<BlockMatrix> {
    let n = samples.n();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    let mean = samples.data.row_mean();
    let mut centered = samples.data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.tr_mul(&centered) / n as f64;
    BlockMatrix::symmetric(samples.layout.clone(), cov)
}

/// Output of the correlation step.
///
/// `r` is expressed in mass-weighted coordinates, `R = I_K + M^{1/2} R₀ M^{1/2}`,
/// which is the matrix the solver consumes. Its diagonal blocks are exactly
/// the identity.
#[derive(Clone, Debug)]
pub struct CorrelationEstimate {
    pub r: BlockMatrix,
    pub epsilon: f64,
    pub mass: MassMatrix,
}

impl CorrelationEstimate {
    /// The cross-correlation `R₀` in the original discretization.
    pub fn cross_correlation(&self) -> BlockMatrix {
        let mut shifted = self.r.clone().into_data();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] -= 1.0;
        }
        let weighted = BlockMatrix::from_parts(self.r.layout().clone(), shifted, true);
        self.mass.unweigh(&weighted)
    }

    /// Largest off-diagonal block Frobenius norm of `R`. Any penalty at or
    /// above this value yields the empty graph.
    pub fn lambda_max(&self) -> f64 {
        crate::solver::lambda_max(&self.r)
    }
}

/// Computes `R̂ = I + [εI + D∘CM]^{-1/2} (C − D∘C) [εI + D∘MC]^{-1/2}` in
/// mass-weighted coordinates.
///
/// With `C̃ = M^{1/2} C M^{1/2}`, each off-diagonal block becomes
/// `(εI + C̃_ii)^{-1/2} C̃_ij (εI + C̃_jj)^{-1/2}`, so only the `p` diagonal
/// blocks are ever decomposed.
pub fn regularized_correlation(c: &BlockMatrix, epsilon: f64) -> Result<CorrelationEstimate> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    let layout = c.layout();
    let mass = MassMatrix::from_layout(layout);
    let weighted = mass.weigh(c);

    let mut inv_sqrt = Vec::with_capacity(layout.p());
    for node in 0..layout.p() {
        let block = weighted.block(node, node).clone_owned();
        let eig = SymEigen::new(&block)?;
        let top = eig.values().last().copied().unwrap_or(0.0).max(0.0);
        let floor = top * block.nrows() as f64 * f64::EPSILON;
        if epsilon == 0.0 && eig.values().iter().any(|&mu| mu <= floor) {
            return Err(Error::SingularDiagonal { node });
        }
        inv_sqrt.push(eig.map(|mu| 1.0 / (mu.max(0.0) + epsilon).sqrt()));
    }

    let k = layout.dim();
    let mut r = BlockMatrix::from_parts(layout.clone(), DMatrix::identity(k, k), true);
    for (i, j) in layout.upper_pairs() {
        let block = &inv_sqrt[i] * weighted.block(i, j) * &inv_sqrt[j];
        r.block_mut(i, j).copy_from(&block);
        r.block_mut(j, i).copy_from(&block.transpose());
    }
    Ok(CorrelationEstimate { r, epsilon, mass })
}

/// Default ridge `ε = s̄ (log p / n)^{1/4}`, where `s̄` is the mean diagonal
/// entry of `M^{1/2} C M^{1/2}`.
pub fn default_epsilon(c: &BlockMatrix, n: usize) -> f64 {
    let layout = c.layout();
    let mass = MassMatrix::from_layout(layout);
    let k = layout.dim();
    let mean_diag = (0..k).map(|i| mass.weights()[i] * c.data()[(i, i)]).sum::<f64>() / k as f64;
    let p = layout.p() as f64;
    mean_diag * (p.ln() / n.max(1) as f64).powf(0.25)
}
