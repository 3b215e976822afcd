//! Runs one simulated design end to end and prints the ROC summary.
//!
//! cargo run --release -p fglasso --example desk_run -- <setup> <p> <n> <grid> <seed> [epsilon] [lambda_min_ratio]

use std::time::Instant;

use fglasso::estimate::{default_epsilon, empirical_covariance, regularized_correlation};
use fglasso::graph::{compare, extract_graph, roc_curve};
use fglasso::simgen::{simulate, Setup, SimConfig};
use fglasso::solver::{admm_solve, default_lambda_grid, AdmmSolution, SolverConfig};
use fglasso::Error;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let setup = Setup::try_from(arg(0, 3) as u8)?;
    let config = SimConfig::new(
        setup,
        arg(2, 100) as usize,
        arg(1, 21) as usize,
        arg(3, 30) as usize,
        arg(4, 1),
    );

    let start = Instant::now();
    let draw = simulate(&config)?;
    let c = empirical_covariance(&draw.samples)?;
    let eps = args
        .get(5)
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| default_epsilon(&c, config.n));
    let est = regularized_correlation(&c, eps)?;
    let ratio = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let lambdas = default_lambda_grid(est.lambda_max(), 30, ratio);
    println!("epsilon = {eps:.4}, lambda_max = {:.4}", est.lambda_max());
    println!(
        "{:>10} {:>6} {:>6} {:>6} {:>6} {:>9} {:>9} {:>8}",
        "lambda", "edges", "tpr", "fpr", "iters", "kkt", "dual", "secs"
    );
    let mut path: Vec<AdmmSolution> = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let cfg = SolverConfig::with_lambda(lambda);
        let s = match admm_solve(&est.r, &cfg, path.last()) {
            Ok(s) => s,
            Err(Error::MaxIterationsExceeded { best, .. }) => *best,
            Err(e) => return Err(e.into()),
        };
        let (tpr, fpr) = compare(&extract_graph(&s, est.r.layout()), &draw.truth)?;
        println!(
            "{:>10.4e} {:>6} {:>6.3} {:>6.3} {:>6} {:>9.2e} {:>9.2e} {:>8.1}",
            lambda,
            s.edge_count(),
            tpr,
            fpr,
            s.iterations,
            s.kkt_gap,
            s.dual_gap,
            start.elapsed().as_secs_f64()
        );
        path.push(s);
    }
    let roc = roc_curve(&path, &draw.truth)?;
    println!("AUC = {:.4}  ({:.1?})", roc.auc, start.elapsed());
    Ok(())
}
