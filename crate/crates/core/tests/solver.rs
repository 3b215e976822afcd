mod common;

use common::oracle::{self, Blocks};
use common::random_correlation;
use fglasso::blockmat::diag_mask;
use fglasso::solver::{
    admm_solve, admm_solve_from, dual_feasibility_gap, kkt_residual, lambda_max, lambda_path, objective,
    smooth_objective,
};
use fglasso::{BlockMatrix, SolverConfig};
use nalgebra::DMatrix;

fn config(lambda: f64, tol: f64) -> SolverConfig {
    SolverConfig {
        lambda,
        tol,
        ..SolverConfig::default()
    }
}

#[test]
fn block_objective_matches_proximal_gradient() {
    let cases: &[(&[usize], f64)] = &[
        (&[2, 2], 0.1),
        (&[1, 2, 3], 0.05),
        (&[3, 1, 2, 2], 0.2),
        (&[2, 2, 2, 2, 2], 0.3),
    ];
    for (seed, &(sizes, lambda)) in cases.iter().enumerate() {
        let r = random_correlation(seed as u64, sizes);
        let sol = admm_solve(&r, &config(lambda, 1e-6), None).unwrap();
        let blocks = Blocks::new(sizes);
        let q_ref = oracle::minimize(r.data(), &blocks, lambda);
        let f_ref = oracle::full_objective(&q_ref, r.data(), &blocks, lambda);
        let f = objective(&sol.q, &r, lambda);
        assert!(((f - f_ref) / f_ref).abs() < 1e-6, "sizes {sizes:?}: {f} vs {f_ref}");
        assert!((sol.q.data() - &q_ref).norm() / q_ref.norm() < 1e-3);
    }
}

#[test]
fn unique_solution_from_different_starts() {
    let r = random_correlation(11, &[2, 3, 2, 1]);
    let cfg = config(0.08, 1e-6);
    let d = diag_mask(&r);
    let a = admm_solve_from(&r, &cfg, d.clone(), d).unwrap();
    let layout = r.layout();
    let b = admm_solve_from(&r, &cfg, BlockMatrix::identity(layout), BlockMatrix::zeros(layout)).unwrap();
    let rel = (a.q.data() - b.q.data()).norm() / a.q.data().norm();
    assert!(rel <= 1e-3, "relative difference {rel}");
}

#[test]
fn warm_start_saves_iterations() {
    let sizes = [2usize; 10];
    let r = random_correlation(5, &sizes);
    let lmax = lambda_max(&r);
    let lambdas: Vec<f64> = (0..8).map(|k| lmax * 0.7f64.powi(k)).collect();
    let cfg = SolverConfig::default();
    let warm: usize = lambda_path(&r, &lambdas, &cfg)
        .unwrap()
        .iter()
        .map(|s| s.iterations)
        .sum();
    let cold: usize = lambdas
        .iter()
        .map(|&l| {
            admm_solve(&r, &SolverConfig { lambda: l, ..cfg }, None)
                .unwrap()
                .iterations
        })
        .sum();
    assert!(warm < cold, "warm {warm} vs cold {cold}");
}

#[test]
fn path_endpoints() {
    let r = random_correlation(3, &[2, 1, 3]);
    let lmax = lambda_max(&r);
    let path = lambda_path(&r, &[lmax, 0.0], &config(0.0, 1e-7)).unwrap();
    assert_eq!(path[0].edge_count(), 0);
    let inv = r.data().clone().try_inverse().unwrap();
    let rel = (path[1].q.data() - &inv).norm() / inv.norm();
    assert!(rel < 1e-4, "{rel}");
    assert_eq!(path[1].edge_count(), 3);
}

#[test]
fn diagnostics_bounded_by_tolerance() {
    let r = random_correlation(9, &[3, 3, 3, 3]);
    let lmax = lambda_max(&r);
    for frac in [0.9, 0.5, 0.2, 0.05] {
        let lambda = lmax * frac;
        let sol = admm_solve(&r, &config(lambda, 1e-4), None).unwrap();
        assert!(sol.converged);
        assert!(sol.kkt_gap <= 10.0 * 1e-4, "kkt {}", sol.kkt_gap);
        assert!(sol.dual_gap <= 10.0 * 1e-4, "dual {}", sol.dual_gap);
        assert_eq!(kkt_residual(&sol, &r, lambda).unwrap(), sol.kkt_gap);
        assert_eq!(dual_feasibility_gap(&sol, &r, lambda).unwrap(), sol.dual_gap);
        let z = sol.z.data();
        assert_eq!(z, &z.transpose());
    }
}

#[test]
fn perturbing_solution_raises_kkt() {
    let r = random_correlation(2, &[2, 2, 2]);
    let lambda = 0.3 * lambda_max(&r);
    let sol = admm_solve(&r, &config(lambda, 1e-7), None).unwrap();
    let base = kkt_residual(&sol, &r, lambda).unwrap();
    let mut bumped = sol.clone();
    let mut q = sol.q.data().clone();
    q[(0, 0)] += 0.1;
    bumped.q = BlockMatrix::symmetric(r.layout().clone(), q).unwrap();
    assert!(kkt_residual(&bumped, &r, lambda).unwrap() > base + 1e-3);
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = common::rng(77);
    for _ in 0..5 {
        let a = common::gaussian_matrix(&mut rng, 5, 8);
        let q = &a * a.transpose() / 8.0 + DMatrix::identity(5, 5) * 0.3;
        let b = common::gaussian_matrix(&mut rng, 5, 5);
        let r = (&b + b.transpose()) * 0.5;
        let grad = &r - q.clone().try_inverse().unwrap();
        let h = 1e-5;
        for i in 0..5 {
            for j in 0..5 {
                // symmetric perturbation so that Q stays in the domain
                let mut e = DMatrix::zeros(5, 5);
                e[(i, j)] += 0.5;
                e[(j, i)] += 0.5;
                let fd = (smooth_objective(&(&q + &e * h), &r) - smooth_objective(&(&q - &e * h), &r)) / (2.0 * h);
                assert!((fd - grad[(i, j)]).abs() <= 1e-5, "({i},{j}): {fd} vs {}", grad[(i, j)]);
            }
        }
    }
}
