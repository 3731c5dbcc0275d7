use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use tsmc::data::{assemble_split, ExpenseMatrix};
use tsmc::eval::patterns::{write_clusters_csv, write_forecasts_csv, write_patterns_csv};
use tsmc::eval::{
    cluster_assign, cumulative_patterns, evaluate as run_evaluation, synth::tail_length, synthesize_with_layout,
    EvalOptions, MaskLayout, Method,
};
use tsmc::ingest::{index_ledger, parse_expenses, parse_projects, write_expenses, write_projects, TimeKey};
use tsmc::persist::ModelDocument;
use tsmc::solver::{denormalize, fit as run_fit, update_z, FactorModel, FitConfig};
use tsmc::{Error, ErrorKind};

#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Solver => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn with_path(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError {
        kind: ErrorKind::Data,
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult<T> = Result<T, CliError>;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(with_path(path))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(with_path(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(with_path(path))
}

/// `forecasts.csv` -> `forecasts.<suffix>.csv`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn load_matrix(data: &Path, meta: &Path, cutoff: Option<TimeKey>, horizon: Option<usize>) -> CliResult<ExpenseMatrix> {
    let rows = parse_expenses(open(data)?)?;
    let projects = parse_projects(open(meta)?)?;
    let ledger = index_ledger(&rows, &projects, cutoff)?;
    if cutoff.is_some() {
        if ledger.train.is_empty() {
            return Err(Error::NoTrainingSamples.into());
        }
        if ledger.held_out.is_empty() {
            return Err(Error::NoTestSamples.into());
        }
    }
    Ok(assemble_split(
        &ledger.train,
        &ledger.held_out,
        &ledger.projects,
        horizon,
    )?)
}

fn write_outputs(out: &Path, matrix: &ExpenseMatrix, model: &FactorModel, z: &ndarray::Array2<f64>) -> CliResult<()> {
    let expenses = denormalize(z.view(), &matrix.budgets)?;
    let mut file = create(out)?;
    write_forecasts_csv(&mut file, &matrix.project_ids, expenses.view(), matrix.mask.view())?;
    file.flush().map_err(with_path(out))?;

    let patterns_path = sibling(out, "patterns");
    let mut file = create(&patterns_path)?;
    write_patterns_csv(&mut file, cumulative_patterns(model.w.view()).view())?;
    file.flush().map_err(with_path(&patterns_path))?;

    let clusters_path = sibling(out, "clusters");
    let mut file = create(&clusters_path)?;
    write_clusters_csv(&mut file, &matrix.project_ids, &cluster_assign(model.h.view()))?;
    file.flush().map_err(with_path(&clusters_path))?;
    Ok(())
}

pub fn fit(
    data: &Path,
    meta: &Path,
    model_path: &Path,
    out: &Path,
    config: &FitConfig,
    horizon: Option<usize>,
) -> CliResult<()> {
    let matrix = load_matrix(data, meta, None, horizon)?;
    let result = run_fit(matrix.x.view(), matrix.mask.view(), config)?;

    let doc = ModelDocument::from_fit(&result, &matrix.budgets, &matrix.project_ids);
    let mut file = create(model_path)?;
    file.write_all(doc.to_json()?.as_bytes())
        .map_err(with_path(model_path))?;
    file.flush().map_err(with_path(model_path))?;
    write_outputs(out, &matrix, &result.model, &result.z)?;

    println!("iterations: {}", result.iterations);
    println!("final objective: {:e}", result.final_objective());
    println!("converged: {}", result.converged);
    Ok(())
}

pub fn forecast(data: &Path, meta: &Path, model_path: &Path, out: &Path) -> CliResult<()> {
    let text = fs::read_to_string(model_path).map_err(with_path(model_path))?;
    let doc = ModelDocument::from_json(&text)?;
    let fitted = doc.factor_model()?;
    let matrix = load_matrix(data, meta, None, Some(doc.m))?;

    let row_of: HashMap<&str, usize> = doc
        .project_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut h = ndarray::Array2::zeros((matrix.n_projects(), doc.f));
    for (n, id) in matrix.project_ids.iter().enumerate() {
        let &row = row_of
            .get(id.as_str())
            .ok_or_else(|| Error::UnknownProject(format!("{id} is not in the model")))?;
        h.row_mut(n).assign(&fitted.h.row(row));
    }
    let model = FactorModel { w: fitted.w, h };
    let z = update_z(model.w.view(), model.h.view(), matrix.x.view(), matrix.mask.view())?;
    write_outputs(out, &matrix, &model, &z)?;
    println!(
        "forecast {} projects over {} months",
        matrix.n_projects(),
        matrix.horizon
    );
    Ok(())
}

pub struct EvaluateArgs<'a> {
    pub data: &'a Path,
    pub meta: &'a Path,
    pub out: &'a Path,
    pub cutoff: &'a str,
    pub methods: &'a str,
    pub fit: FitConfig,
    pub horizon: Option<usize>,
    pub knn_k: usize,
}

pub fn evaluate(args: &EvaluateArgs<'_>) -> CliResult<()> {
    let cutoff: TimeKey = args.cutoff.parse().map_err(|_| {
        CliError::usage(format!(
            "invalid --cutoff {:?}: expected YYYY-MM or a month index",
            args.cutoff
        ))
    })?;
    let methods = args
        .methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse::<Method>)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::usage(e.to_string()))?;
    if methods.is_empty() {
        return Err(CliError::usage("--methods is empty"));
    }
    if args.knn_k < 1 {
        return Err(CliError::usage("--knn-k must be at least 1"));
    }
    args.fit.validate()?;

    let matrix = load_matrix(args.data, args.meta, Some(cutoff), args.horizon)?;
    let options = EvalOptions {
        fit: args.fit.clone(),
        knn_k: args.knn_k,
    };
    let reports = run_evaluation(&matrix, &methods, &options)?;

    let mut file = create(args.out)?;
    let mut json = serde_json::to_string_pretty(&reports).map_err(Error::from)?;
    json.push('\n');
    file.write_all(json.as_bytes()).map_err(with_path(args.out))?;
    file.flush().map_err(with_path(args.out))?;

    println!("{:<8} {:>16} {:>10} {:>8}", "method", "rmse", "rel_rmse", "n_test");
    for r in &reports {
        println!(
            "{:<8} {:>16.4} {:>10.4} {:>8}",
            r.method, r.rmse, r.relative_rmse, r.n_test
        );
    }
    Ok(())
}

pub fn synth(
    out: &Path,
    horizon: usize,
    projects: usize,
    rank: usize,
    missing_rate: f64,
    seed: u64,
    layout: &str,
) -> CliResult<()> {
    let layout = match layout {
        "tail" => MaskLayout::Tail,
        "staggered" => MaskLayout::StaggeredTail,
        other => return Err(CliError::usage(format!("unknown --layout {other:?}"))),
    };
    let inst = synthesize_with_layout(horizon, projects, rank, missing_rate, seed, layout).map_err(|e| match e {
        Error::InvalidConfig(_) | Error::RankTooLarge { .. } => CliError::usage(e.to_string()),
        other => other.into(),
    })?;

    fs::create_dir_all(out).map_err(with_path(out))?;
    let targets = [
        ("expenses.csv", Some(true)),
        ("truth.csv", Some(false)),
        ("projects.csv", None),
    ];
    for (name, observed_only) in targets {
        let path = out.join(name);
        let mut file = create(&path)?;
        match observed_only {
            Some(only) => write_expenses(&mut file, &inst.records(only))?,
            None => write_projects(&mut file, &inst.projects())?,
        }
        file.flush().map_err(with_path(&path))?;
    }

    println!("wrote {} months x {} projects to {}", horizon, projects, out.display());
    if layout == MaskLayout::Tail && missing_rate > 0.0 {
        println!(
            "evaluate with --data truth.csv --cutoff {}",
            horizon - tail_length(horizon, missing_rate)
        );
    }
    Ok(())
}
