//! Functional graphical lasso.
//!
//! Estimates the conditional-independence graph of `p` jointly observed
//! random functions. The pipeline is:
//!
//! 1. [`estimate::empirical_covariance`] (or any other
//!    [`estimate::CovarianceEstimator`]) on discretized samples;
//! 2. [`estimate::regularized_correlation`] for the correlation operator
//!    matrix `R̂`;
//! 3. [`solver::admm_solve`] / [`solver::lambda_path`] for the group-lasso
//!    penalized log-determinant program;
//! 4. [`graph::extract_graph`] and [`graph::roc_curve`] on the result.
//!
//! [`simgen`] provides the three benchmark designs with known graphs.

pub mod blockmat;
pub mod error;
pub mod estimate;
pub mod graph;
mod linalg;
pub mod simgen;
pub mod solver;

pub use blockmat::{BlockLayout, BlockMatrix, MassMatrix, Scheme};
pub use error::{Error, Result};
pub use estimate::{CorrelationEstimate, SampleSet};
pub use graph::{GraphEstimate, RocCurve, RocPoint};
pub use simgen::{Setup, SimConfig, SimDraw};
pub use solver::{AdmmSolution, SolverConfig};
