//! `tsmc`: fit, forecast, evaluate and synthesize budget-constrained expense
//! forecasts.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 solver error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "tsmc",
    version,
    about = "Budget-constrained expense forecasting by triple-simplex matrix completion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write the model JSON plus completed forecasts.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        /// Model JSON to write.
        #[arg(long)]
        model: PathBuf,
        /// Forecasts CSV to write; pattern and cluster CSVs go next to it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Number of months M (defaults to the longest ledger or TED).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Complete a ledger with an already fitted model.
    Forecast {
        #[command(flatten)]
        input: InputArgs,
        /// Model JSON written by `fit`.
        #[arg(long)]
        model: PathBuf,
        /// Forecasts CSV to write; pattern and cluster CSVs go next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Withhold everything at or after a cutoff and score each method on it.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        /// Report JSON to write.
        #[arg(long)]
        out: PathBuf,
        /// First withheld month: YYYY-MM for dated ledgers, an index otherwise.
        #[arg(long)]
        cutoff: String,
        /// Comma-separated methods from tsmc, median, knn.
        #[arg(long, default_value = "tsmc,median,knn")]
        methods: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        horizon: Option<usize>,
        /// Neighbours used by the knn baseline.
        #[arg(long, default_value_t = 10)]
        knn_k: usize,
    },
    /// Write a synthetic low-rank dataset (expenses.csv, projects.csv, truth.csv).
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of months M.
        #[arg(long, default_value_t = 36)]
        horizon: usize,
        /// Number of projects N.
        #[arg(long, default_value_t = 200)]
        projects: usize,
        /// Number of expense patterns F.
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long, default_value_t = 0.4)]
        missing_rate: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Missing-month layout: tail (same months for every project) or
        /// staggered (each project observed up to a different month).
        #[arg(long, default_value = "tail")]
        layout: String,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Expenses CSV.
    #[arg(long)]
    data: PathBuf,
    /// Projects CSV.
    #[arg(long)]
    meta: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn main() -> ExitCode {
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

    let result = match cli.command {
        Command::Fit {
            input,
            model,
            out,
            solver,
            horizon,
        } => commands::fit(&input.data, &input.meta, &model, &out, &solver.into(), horizon),
        Command::Forecast { input, model, out } => commands::forecast(&input.data, &input.meta, &model, &out),
        Command::Evaluate {
            input,
            out,
            cutoff,
            methods,
            solver,
            horizon,
            knn_k,
        } => commands::evaluate(&commands::EvaluateArgs {
            data: &input.data,
            meta: &input.meta,
            out: &out,
            cutoff: &cutoff,
            methods: &methods,
            fit: solver.into(),
            horizon,
            knn_k,
        }),
        Command::Synth {
            out,
            horizon,
            projects,
            rank,
            missing_rate,
            seed,
            layout,
        } => commands::synth(&out, horizon, projects, rank, missing_rate, seed, &layout),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl From<SolverArgs> for tsmc::solver::FitConfig {
    fn from(a: SolverArgs) -> Self {
        tsmc::solver::FitConfig {
            rank: a.rank,
            max_iters: a.max_iters,
            tol: a.tol,
            seed: a.seed,
            ..Default::default()
        }
    }
}
