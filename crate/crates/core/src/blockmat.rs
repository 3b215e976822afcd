//! Block-structured dense matrices.
//!
//! A discretized element of `H_1 × … × H_p` is a vector of length `K` split
//! into `p` contiguous node blocks. Operators on that space are `K × K`
//! matrices addressed by pairs of node blocks. Inner products are taken
//! against a diagonal mass matrix `M` whose weights depend on how each node
//! was discretized.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};

/// Relative tolerance under which a matrix is treated as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// How a node's function was turned into a finite vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Point evaluation on a grid.
    Points,
    /// Averages over cells of roughly equal measure.
    Cells,
    /// Coefficients in an orthonormal basis.
    Basis,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Points => "points",
            Scheme::Cells => "cells",
            Scheme::Basis => "basis",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "points" | "point" => Ok(Scheme::Points),
            "cells" | "cell" => Ok(Scheme::Cells),
            "basis" => Ok(Scheme::Basis),
            other => Err(Error::InvalidLayout(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Partition of `0..K` into `p` contiguous node blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    sizes: Vec<usize>,
    schemes: Vec<Scheme>,
    // prefix sums, length p + 1
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(sizes: Vec<usize>, schemes: Vec<Scheme>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidLayout("at least one node is required".into()));
        }
        if sizes.len() != schemes.len() {
            return Err(Error::InvalidLayout(format!(
                "{} sizes but {} schemes",
                sizes.len(),
                schemes.len()
            )));
        }
        if let Some(node) = sizes.iter().position(|&k| k == 0) {
            return Err(Error::InvalidLayout(format!("node {node} has size 0")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for &k in &sizes {
            offsets.push(offsets.last().unwrap() + k);
        }
        Ok(Self {
            sizes,
            schemes,
            offsets,
        })
    }

    /// `p` nodes sharing the same size and scheme.
    pub fn uniform(p: usize, size: usize, scheme: Scheme) -> Result<Self> {
        Self::new(vec![size; p], vec![scheme; p])
    }

    /// `p` nodes of size one in the basis scheme, i.e. a classical
    /// multivariate problem.
    pub fn scalar(p: usize) -> Result<Self> {
        Self::uniform(p, 1, Scheme::Basis)
    }

    pub fn p(&self) -> usize {
        self.sizes.len()
    }

    /// Total dimension `K = Σ K_i`.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn schemes(&self) -> &[Scheme] {
        &self.schemes
    }

    pub fn size(&self, node: usize) -> usize {
        self.sizes[node]
    }

    pub fn scheme(&self, node: usize) -> Scheme {
        self.schemes[node]
    }

    pub fn offset(&self, node: usize) -> usize {
        self.offsets[node]
    }

    pub fn range(&self, node: usize) -> Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    /// Node owning coordinate `index`.
    pub fn node_of(&self, index: usize) -> usize {
        assert!(index < self.dim(), "index {index} out of range");
        self.offsets.partition_point(|&o| o <= index) - 1
    }

    /// Ordered node pairs `(i, j)` with `i < j`.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let p = self.p();
        (0..p).flat_map(move |i| ((i + 1)..p).map(move |j| (i, j)))
    }
}

/// Diagonal inner-product weights `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct MassMatrix {
    weights: DVector<f64>,
}

impl MassMatrix {
    pub fn from_layout(layout: &BlockLayout) -> Self {
        let mut weights = DVector::zeros(layout.dim());
        for node in 0..layout.p() {
            let w = match layout.scheme(node) {
                Scheme::Points | Scheme::Cells => 1.0 / layout.size(node) as f64,
                Scheme::Basis => 1.0,
            };
            weights.rows_mut(layout.offset(node), layout.size(node)).fill(w);
        }
        Self { weights }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            weights: DVector::from_element(dim, 1.0),
        }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `M^{1/2} A M^{1/2}`.
    pub fn weigh(&self, a: &BlockMatrix) -> BlockMatrix {
        let s = self.weights.map(f64::sqrt);
        let data = DMatrix::from_fn(a.dim(), a.dim(), |i, j| s[i] * a.data[(i, j)] * s[j]);
        BlockMatrix {
            layout: a.layout.clone(),
            data,
            symmetric: a.symmetric,
        }
    }

    /// `M^{-1/2} A M^{-1/2}`, inverse of [`MassMatrix::weigh`].
    pub fn unweigh(&self, a: &BlockMatrix) -> BlockMatrix {
        let s = self.weights.map(|w| 1.0 / w.sqrt());
        let data = DMatrix::from_fn(a.dim(), a.dim(), |i, j| s[i] * a.data[(i, j)] * s[j]);
        BlockMatrix {
            layout: a.layout.clone(),
            data,
            symmetric: a.symmetric,
        }
    }
}

/// Mass matrix of a layout: `1/K_i` on point and cell nodes, `1` on basis nodes.
pub fn mass_matrix(layout: &BlockLayout) -> MassMatrix {
    MassMatrix::from_layout(layout)
}

/// Dense `K × K` matrix addressed by node-block pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    layout: BlockLayout,
    data: DMatrix<f64>,
    symmetric: bool,
}

impl BlockMatrix {
    /// General (not necessarily symmetric) block matrix.
    pub fn new(layout: BlockLayout, data: DMatrix<f64>) -> Result<Self> {
        check_square(&layout, &data)?;
        Ok(Self {
            layout,
            data,
            symmetric: false,
        })
    }

    /// Symmetric block matrix; the input is replaced by `(A + Aᵀ)/2`.
    pub fn symmetric(layout: BlockLayout, mut data: DMatrix<f64>) -> Result<Self> {
        check_square(&layout, &data)?;
        linalg::symmetrize_in_place(&mut data);
        Ok(Self {
            layout,
            data,
            symmetric: true,
        })
    }

    pub fn zeros(layout: &BlockLayout) -> Self {
        let k = layout.dim();
        Self {
            layout: layout.clone(),
            data: DMatrix::zeros(k, k),
            symmetric: true,
        }
    }

    pub fn identity(layout: &BlockLayout) -> Self {
        let k = layout.dim();
        Self {
            layout: layout.clone(),
            data: DMatrix::identity(k, k),
            symmetric: true,
        }
    }

    pub(crate) fn from_parts(layout: BlockLayout, data: DMatrix<f64>, symmetric: bool) -> Self {
        debug_assert_eq!(layout.dim(), data.nrows());
        Self {
            layout,
            data,
            symmetric,
        }
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `‖A − Aᵀ‖_F / ‖A‖_F` (zero for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        relative_asymmetry(&self.data)
    }

    /// View of block `A[J_i, J_j]`.
    pub fn block(&self, i: usize, j: usize) -> DMatrixView<'_, f64> {
        self.data.view(
            (self.layout.offset(i), self.layout.offset(j)),
            (self.layout.size(i), self.layout.size(j)),
        )
    }

    pub(crate) fn block_mut(&mut self, i: usize, j: usize) -> DMatrixViewMut<'_, f64> {
        let (ri, cj) = (self.layout.offset(i), self.layout.offset(j));
        let (ni, nj) = (self.layout.size(i), self.layout.size(j));
        self.data.view_mut((ri, cj), (ni, nj))
    }

    pub fn block_frobenius(&self, i: usize, j: usize) -> f64 {
        self.block(i, j).norm()
    }

    /// True when every entry of block `(i, j)` is exactly zero.
    pub fn block_is_zero(&self, i: usize, j: usize) -> bool {
        self.block(i, j).iter().all(|&v| v == 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }
}

fn check_square(layout: &BlockLayout, data: &DMatrix<f64>) -> Result<()> {
    let k = layout.dim();
    if data.nrows() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: data.nrows(),
        });
    }
    if data.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: data.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.norm();
    if scale == 0.0 {
        return 0.0;
    }
    let mut diff = 0.0;
    for j in 0..a.ncols() {
        for i in (j + 1)..a.nrows() {
            let d = a[(i, j)] - a[(j, i)];
            diff += 2.0 * d * d;
        }
    }
    diff.sqrt() / scale
}

/// Hadamard product `D ∘ A` with the block-diagonal indicator `D`.
pub fn diag_mask(a: &BlockMatrix) -> BlockMatrix {
    let mut out = BlockMatrix::from_parts(a.layout.clone(), DMatrix::zeros(a.dim(), a.dim()), a.symmetric);
    for node in 0..a.layout.p() {
        out.block_mut(node, node).copy_from(&a.block(node, node));
    }
    out
}

/// `A − D ∘ A`: the off-diagonal blocks only.
pub fn off_diag(a: &BlockMatrix) -> BlockMatrix {
    let mut out = a.clone();
    for node in 0..a.layout.p() {
        out.block_mut(node, node).fill(0.0);
    }
    out
}

/// Frobenius norm of block `(i, j)` of `M^{1/2} A M^{1/2}`.
fn weighted_block_norm(a: &BlockMatrix, m: &MassMatrix, i: usize, j: usize) -> f64 {
    let w = m.weights();
    let (ri, cj) = (a.layout.offset(i), a.layout.offset(j));
    let block = a.block(i, j);
    let mut acc = 0.0;
    for (c, col) in block.column_iter().enumerate() {
        let wc = w[cj + c];
        for (r, &v) in col.iter().enumerate() {
            acc += w[ri + r] * wc * v * v;
        }
    }
    acc.sqrt()
}

fn selected_block_norms<'a>(
    a: &'a BlockMatrix,
    m: &'a MassMatrix,
    off_diagonal_only: bool,
) -> impl Iterator<Item = f64> + 'a {
    assert_eq!(a.dim(), m.dim(), "mass matrix does not match layout");
    let p = a.layout.p();
    (0..p)
        .flat_map(move |i| (0..p).map(move |j| (i, j)))
        .filter(move |&(i, j)| !(off_diagonal_only && i == j))
        .map(move |(i, j)| weighted_block_norm(a, m, i, j))
}

/// `‖M^{1/2} A M^{1/2}‖_{2,1}`: sum over block pairs of block Frobenius norms.
pub fn block_norm_21(a: &BlockMatrix, m: &MassMatrix, off_diagonal_only: bool) -> f64 {
    selected_block_norms(a, m, off_diagonal_only).sum()
}

/// `‖M^{1/2} A M^{1/2}‖_{2,∞}`: largest block Frobenius norm.
pub fn block_norm_2inf(a: &BlockMatrix, m: &MassMatrix, off_diagonal_only: bool) -> f64 {
    selected_block_norms(a, m, off_diagonal_only).fold(0.0, f64::max)
}

/// `log det₂(I + A) = Σ_j [log(1 + μ_j) − μ_j]` over the eigenvalues of
/// `M^{1/2} A M^{1/2}`, the discrete Carleman–Fredholm log-determinant.
///
/// Fails with [`Error::NotPositiveDefinite`] when some `1 + μ_j ≤ 0`, where
/// the determinant is zero or negative and the logarithm is `−∞`.
pub fn cf_logdet(a: &BlockMatrix, m: &MassMatrix) -> Result<f64> {
    assert_eq!(a.dim(), m.dim(), "mass matrix does not match layout");
    let mut weighted = m.weigh(a).into_data();
    linalg::symmetrize_in_place(&mut weighted);
    let mu = linalg::sym_eigenvalues(&weighted)?;
    let mut acc = 0.0;
    for &x in &mu {
        if 1.0 + x <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: 1.0 + x,
            });
        }
        acc += x.ln_1p() - x;
    }
    Ok(acc)
}

/// `log det(A)` of a symmetric matrix via its eigenvalues.
pub(crate) fn sym_logdet(a: &DMatrix<f64>) -> Result<f64> {
    let eig = SymEigen::new(a)?;
    let min = eig.min_value();
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(eig.values().iter().map(|v| v.ln()).sum())
}
