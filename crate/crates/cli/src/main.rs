use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fglasso_cli::commands::{self, SimulateArgs, SolveArgs};

#[derive(Parser)]
#[command(name = "fglasso", version, about = "Functional graphical lasso")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from one of the three simulation designs.
    Simulate {
        #[arg(long)]
        setup: u8,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 21)]
        p: usize,
        /// Grid points per node.
        #[arg(long, default_value_t = 30)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve at a single penalty.
    Fit {
        #[command(flatten)]
        solve: SolveFlags,
        #[arg(long)]
        lambda: f64,
    },
    /// Solve along a log-spaced penalty grid starting at lambda_max.
    Path {
        #[command(flatten)]
        solve: SolveFlags,
        #[arg(long, default_value_t = 30)]
        n_lambdas: usize,
        #[arg(long, default_value_t = 0.01)]
        lambda_min_ratio: f64,
    },
    /// Score a path directory against the manifest's truth graph.
    Roc {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        path_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveFlags {
    #[arg(long)]
    manifest: PathBuf,
    /// Correlation regularization; defaults to the data-driven rule.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long)]
    out: PathBuf,
    /// Store wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    record_timing: bool,
}

impl From<SolveFlags> for SolveArgs {
    fn from(f: SolveFlags) -> Self {
        SolveArgs {
            manifest: f.manifest,
            epsilon: f.epsilon,
            rho: f.rho,
            tol: f.tol,
            max_iter: f.max_iter,
            out: f.out,
            record_timing: f.record_timing,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            setup,
            n,
            p,
            grid,
            seed,
            out,
        } => commands::cmd_simulate(&SimulateArgs {
            setup,
            n,
            p,
            grid,
            seed,
            out,
        }),
        Command::Fit { solve, lambda } => commands::cmd_fit(&solve.into(), lambda).map(drop),
        Command::Path {
            solve,
            n_lambdas,
            lambda_min_ratio,
        } => commands::cmd_path(&solve.into(), n_lambdas, lambda_min_ratio).map(drop),
        Command::Roc {
            manifest,
            path_dir,
            out,
        } => commands::cmd_roc(&manifest, &path_dir, &out).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if commands::is_usage_error(&e) { 1 } else { 2 })
        }
    }
}
