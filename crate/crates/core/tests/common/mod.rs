#![allow(dead_code)]

pub mod oracle;

use fglasso::estimate::regularized_correlation;
use fglasso::{BlockLayout, BlockMatrix, Scheme};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// A correlation matrix with identity diagonal blocks, built from a random
/// Wishart-type covariance over basis-scheme nodes (unit mass weights).
pub fn random_correlation(seed: u64, sizes: &[usize]) -> BlockMatrix {
    let mut rng = rng(seed);
    let k: usize = sizes.iter().sum();
    let a = gaussian_matrix(&mut rng, k, 2 * k + 2);
    let c = &a * a.transpose() / (2 * k + 2) as f64;
    let layout = BlockLayout::new(sizes.to_vec(), vec![Scheme::Basis; sizes.len()]).unwrap();
    regularized_correlation(&BlockMatrix::symmetric(layout, c).unwrap(), 0.0)
        .unwrap()
        .r
}
