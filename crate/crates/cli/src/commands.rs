//! The four subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use fglasso::estimate::{default_epsilon, empirical_covariance, regularized_correlation};
use fglasso::graph::{compare, extract_graph, roc_from_points};
use fglasso::simgen::{simulate, Setup, SimConfig};
use fglasso::solver::{admm_solve, default_lambda_grid, lambda_path};
use fglasso::{AdmmSolution, CorrelationEstimate, Error, RocPoint, SampleSet, SolverConfig};

use crate::io::{self, DatasetManifest, LoadedManifest};
use crate::report::{roc_svg, ConfigEcho, LambdaDiagnostics, RunReport, VERSION};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRUTH_FILE: &str = "truth_edges.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const REPORT_FILE: &str = "report.json";

/// An invalid flag combination, reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// True when the error came from bad arguments rather than bad data or I/O.
pub fn is_usage_error(e: &anyhow::Error) -> bool {
    e.chain()
        .any(|c| c.is::<UsageError>() || matches!(c.downcast_ref::<Error>(), Some(Error::InvalidConfig(_))))
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

pub struct SimulateArgs {
    pub setup: u8,
    pub n: usize,
    pub p: usize,
    pub grid: usize,
    pub seed: u64,
    pub out: PathBuf,
}

/// Writes `samples.csv`, `truth_edges.csv` and `manifest.json` into `out`.
pub fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let config = SimConfig::new(Setup::try_from(args.setup)?, args.n, args.p, args.grid, args.seed);
    config.validate()?;
    let draw = simulate(&config)?;
    create_dir(&args.out)?;
    io::write_samples(&args.out.join(SAMPLES_FILE), draw.samples.data())?;
    io::write_edges(&args.out.join(TRUTH_FILE), &draw.truth)?;
    let manifest = DatasetManifest::from_layout(
        draw.samples.layout(),
        PathBuf::from(SAMPLES_FILE),
        Some(PathBuf::from(TRUTH_FILE)),
    );
    io::write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    println!(
        "wrote {} samples of {} nodes ({} truth edges) to {}",
        draw.samples.n(),
        config.p,
        draw.truth.edge_count(),
        args.out.display()
    );
    Ok(())
}

/// Estimator and solver flags shared by `fit` and `path`.
pub struct SolveArgs {
    pub manifest: PathBuf,
    pub epsilon: Option<f64>,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub out: PathBuf,
    pub record_timing: bool,
}

impl SolveArgs {
    fn solver_config(&self, lambda: f64) -> anyhow::Result<SolverConfig> {
        let config = SolverConfig {
            lambda,
            rho: self.rho,
            tol: self.tol,
            max_iter: self.max_iter,
        };
        config.validate()?;
        Ok(config)
    }

    fn echo(&self, epsilon: f64) -> ConfigEcho {
        ConfigEcho {
            manifest: self.manifest.display().to_string(),
            epsilon,
            epsilon_is_default: self.epsilon.is_none(),
            rho: self.rho,
            tol: self.tol,
            max_iter: self.max_iter,
            lambda: None,
            n_lambdas: None,
            lambda_min_ratio: None,
        }
    }
}

struct Prepared {
    samples: SampleSet,
    estimate: CorrelationEstimate,
}

fn prepare(args: &SolveArgs) -> anyhow::Result<Prepared> {
    if let Some(e) = args.epsilon {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(usage(format!("--epsilon must be finite and >= 0, got {e}")));
        }
    }
    let loaded = LoadedManifest::load(&args.manifest)?;
    let samples = loaded.samples()?;
    let c = empirical_covariance(&samples)?;
    let epsilon = args.epsilon.unwrap_or_else(|| default_epsilon(&c, samples.n()));
    let estimate = regularized_correlation(&c, epsilon)?;
    log::info!("epsilon = {epsilon}, lambda_max = {}", estimate.lambda_max());
    Ok(Prepared { samples, estimate })
}

fn report(command: &str, prepared: &Prepared, config: ConfigEcho, runs: &[AdmmSolution]) -> RunReport {
    let layout = prepared.samples.layout();
    RunReport {
        version: VERSION.into(),
        command: command.into(),
        config,
        n: prepared.samples.n(),
        p: layout.p(),
        dim: layout.dim(),
        lambda_max: prepared.estimate.lambda_max(),
        runs: runs.iter().map(LambdaDiagnostics::from).collect(),
        elapsed_seconds: None,
    }
}

fn solve_or_best(r: &fglasso::BlockMatrix, config: &SolverConfig) -> anyhow::Result<AdmmSolution> {
    match admm_solve(r, config, None) {
        Ok(s) => Ok(s),
        Err(Error::MaxIterationsExceeded {
            best,
            iterations,
            residual,
        }) => {
            log::warn!("no convergence after {iterations} iterations (residual {residual:.3e})");
            Ok(*best)
        }
        Err(e) => Err(e.into()),
    }
}

/// Single-penalty fit: `edges.csv`, `H.csv`, `Q.csv` and `report.json`.
///
/// `H` is the precision operator carried by the sparse iterate `Z`, so its
/// zero pattern matches the edge list; `Q` is the dense iterate in
/// mass-weighted coordinates.
pub fn cmd_fit(args: &SolveArgs, lambda: f64) -> anyhow::Result<RunReport> {
    let start = Instant::now();
    let config = args.solver_config(lambda)?;
    let prepared = prepare(args)?;
    let solution = solve_or_best(&prepared.estimate.r, &config)?;
    let layout = prepared.samples.layout();

    create_dir(&args.out)?;
    io::write_edges(&args.out.join("edges.csv"), &extract_graph(&solution, layout))?;
    let h = solution.sparse_precision_operator(&prepared.estimate.mass);
    io::write_matrix(&args.out.join("H.csv"), &h)?;
    io::write_matrix(&args.out.join("Q.csv"), &solution.q)?;

    let mut echo = args.echo(prepared.estimate.epsilon);
    echo.lambda = Some(lambda);
    let mut rep = report("fit", &prepared, echo, std::slice::from_ref(&solution));
    if args.record_timing {
        rep.elapsed_seconds = Some(start.elapsed().as_secs_f64());
    }
    io::write_json(&args.out.join(REPORT_FILE), &rep)?;
    println!(
        "lambda = {lambda}: {} edges, {} iterations, converged = {}, kkt = {:.3e}, dual gap = {:.3e}",
        solution.edge_count(),
        solution.iterations,
        solution.converged,
        solution.kkt_gap,
        solution.dual_gap
    );
    Ok(rep)
}

pub fn edges_file_name(index: usize) -> String {
    format!("edges_{:03}.csv", index + 1)
}

/// Penalty path over the default grid: one edge list per penalty, a
/// `summary.csv` table and `report.json`.
pub fn cmd_path(args: &SolveArgs, n_lambdas: usize, lambda_min_ratio: f64) -> anyhow::Result<RunReport> {
    let start = Instant::now();
    if n_lambdas == 0 {
        return Err(usage("--n-lambdas must be at least 1"));
    }
    if !(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0) {
        return Err(usage(format!(
            "--lambda-min-ratio must lie in (0, 1), got {lambda_min_ratio}"
        )));
    }
    let config = args.solver_config(0.0)?;
    let prepared = prepare(args)?;
    let lambdas = default_lambda_grid(prepared.estimate.lambda_max(), n_lambdas, lambda_min_ratio);
    let path = lambda_path(&prepared.estimate.r, &lambdas, &config)?;
    let layout = prepared.samples.layout();

    create_dir(&args.out)?;
    let mut rows = Vec::with_capacity(path.len());
    for (k, s) in path.iter().enumerate() {
        let name = edges_file_name(k);
        io::write_edges(&args.out.join(&name), &extract_graph(s, layout))?;
        rows.push(vec![
            (k + 1).to_string(),
            s.lambda.to_string(),
            s.edge_count().to_string(),
            s.iterations.to_string(),
            s.converged.to_string(),
            s.objective.to_string(),
            s.kkt_gap.to_string(),
            s.dual_gap.to_string(),
            name,
        ]);
    }
    io::write_table(
        &args.out.join(SUMMARY_FILE),
        &[
            "index",
            "lambda",
            "edges",
            "iterations",
            "converged",
            "objective",
            "kkt_gap",
            "dual_gap",
            "file",
        ],
        rows,
    )?;

    let mut echo = args.echo(prepared.estimate.epsilon);
    echo.n_lambdas = Some(n_lambdas);
    echo.lambda_min_ratio = Some(lambda_min_ratio);
    let mut rep = report("path", &prepared, echo, &path);
    if args.record_timing {
        rep.elapsed_seconds = Some(start.elapsed().as_secs_f64());
    }
    io::write_json(&args.out.join(REPORT_FILE), &rep)?;
    let unconverged = path.iter().filter(|s| !s.converged).count();
    println!(
        "{} penalties from {:.4e} to {:.4e}, {unconverged} not converged",
        path.len(),
        lambdas[0],
        lambdas[lambdas.len() - 1]
    );
    Ok(rep)
}

/// Scores a path directory against the manifest's truth graph; writes
/// `roc.csv` and `roc.svg` and returns the AUC.
pub fn cmd_roc(manifest: &Path, path_dir: &Path, out: &Path) -> anyhow::Result<f64> {
    let loaded = LoadedManifest::load(manifest)?;
    let truth = loaded
        .truth()?
        .with_context(|| format!("{} has no truth graph", manifest.display()))?;
    let p = loaded.manifest.p;
    let summary = path_dir.join(SUMMARY_FILE);
    let mut rdr = csv::Reader::from_path(&summary).with_context(|| format!("cannot open {}", summary.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: missing column {name:?}", summary.display()))
    };
    let (lambda_col, file_col) = (col("lambda")?, col("file")?);
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record.with_context(|| format!("{}: malformed row", summary.display()))?;
        let lambda: f64 = record[lambda_col]
            .parse()
            .with_context(|| format!("{}: bad lambda {:?}", summary.display(), &record[lambda_col]))?;
        let graph = io::read_edges(&path_dir.join(&record[file_col]), p)?;
        let (tpr, fpr) = compare(&graph, &truth)?;
        points.push(RocPoint {
            lambda,
            tpr,
            fpr,
            edges: graph.edge_count(),
        });
    }
    if points.is_empty() {
        bail!("{}: no path entries", summary.display());
    }
    let curve = roc_from_points(points);
    create_dir(out)?;
    let rows = curve
        .points
        .iter()
        .map(|pt| {
            vec![
                pt.lambda.to_string(),
                pt.tpr.to_string(),
                pt.fpr.to_string(),
                pt.edges.to_string(),
            ]
        })
        .collect();
    io::write_table(&out.join("roc.csv"), &["lambda", "tpr", "fpr", "edges"], rows)?;
    io::write_atomic(&out.join("roc.svg"), roc_svg(&curve).as_bytes())?;
    println!("AUC = {:.6}", curve.auc);
    Ok(curve.auc)
}
