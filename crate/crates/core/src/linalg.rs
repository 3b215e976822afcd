//! Dense symmetric eigendecomposition backed by faer.
//!
//! Storage throughout the crate is `nalgebra::DMatrix`; both libraries are
//! column-major so the input is borrowed without copying.

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
pub struct SymEigen {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

impl SymEigen {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: Mat::zeros(0, 0),
            });
        }
        let view = MatRef::from_column_major_slice(a.as_slice(), n, n);
        let evd = view.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenFailure)?;
        let values = evd.S().column_vector().iter().copied().collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    /// Column `j` of the eigenvector matrix.
    pub fn vector(&self, j: usize) -> &[f64] {
        self.vectors.col_as_slice(j)
    }

    /// Returns `E diag(f(γ)) Eᵀ`, symmetrized exactly.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mapped: Vec<f64> = self.values.iter().map(|&g| f(g)).collect();
        self.compose(&mapped)
    }

    /// Returns `E diag(d) Eᵀ` for the given diagonal. Only the lower
    /// triangle is multiplied out; the upper one is mirrored, so the result
    /// is bitwise symmetric.
    pub fn compose(&self, diagonal: &[f64]) -> DMatrix<f64> {
        let n = self.values.len();
        assert_eq!(diagonal.len(), n);
        let mut out = DMatrix::zeros(n, n);
        if n == 0 {
            return out;
        }
        let u = self.vectors.as_ref();
        let mut scaled = self.vectors.clone();
        for (j, &d) in diagonal.iter().enumerate() {
            for v in scaled.col_as_slice_mut(j) {
                *v *= d;
            }
        }
        let dst = MatMut::from_column_major_slice_mut(out.as_mut_slice(), n, n);
        triangular::matmul(
            dst,
            BlockStructure::TriangularLower,
            Accum::Replace,
            scaled.as_ref(),
            BlockStructure::Rectangular,
            u.transpose(),
            BlockStructure::Rectangular,
            1.0,
            Par::Seq,
        );
        for j in 0..n {
            for i in (j + 1)..n {
                out[(j, i)] = out[(i, j)];
            }
        }
        out
    }
}

pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    MatRef::from_column_major_slice(a.as_slice(), n, n)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::EigenFailure)
}

/// Replaces `a` by `(a + aᵀ)/2`; the result is bitwise symmetric.
pub fn symmetrize_in_place(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
