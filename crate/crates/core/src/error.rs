use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration.
    Usage,
    /// Input data that cannot be ingested or is inconsistent.
    Data,
    /// Numerical failure inside the solver.
    Solver,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible simplex: total {0} is negative")]
    InfeasibleSimplex(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("empty input")]
    Empty,
    #[error("oracle dimension limit: dim {0} exceeds 12")]
    OracleDimensionLimit(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("rank too large: rank {rank} must be below min({m}, {n})")]
    RankTooLarge { rank: usize, m: usize, n: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("budget exceeded by observations in column {column}: observed sum {sum}")]
    BudgetExceeded { column: usize, sum: f64 },
    #[error("negative or non-finite observed entry at row {row}, column {column}")]
    InvalidEntry { row: usize, column: usize },
    #[error("{project} has no missing months left but leaves fraction {residual} of its budget unspent")]
    UnplacedMass { project: String, residual: f64 },
    #[error("degenerate step: non-finite gradient")]
    DegenerateStep,
    #[error("non-positive budget {budget} at column {column}")]
    NonPositiveBudget { column: usize, budget: f64 },
    #[error("unknown project id {0:?}")]
    UnknownProject(String),
    #[error("duplicate project id {0:?}")]
    DuplicateProject(String),
    #[error("over budget: project {project:?} has observed fraction {sum}")]
    OverBudget { project: String, sum: f64 },
    #[error("completed project {project:?} spends fraction {sum} of its budget, expected 1")]
    BudgetNotExhausted { project: String, sum: f64 },
    #[error("month {month} of project {project:?} is outside horizon {horizon}")]
    OutsideHorizon {
        project: String,
        month: usize,
        horizon: usize,
    },
    #[error("date {year}-{month:02} is before epoch {epoch_year}-{epoch_month:02}")]
    DateBeforeEpoch {
        year: i32,
        month: u32,
        epoch_year: i32,
        epoch_month: u32,
    },
    #[error("invalid date {0:?}: expected YYYY-MM")]
    InvalidDate(String),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("no training samples before the cutoff")]
    NoTrainingSamples,
    #[error("no test samples at or after the cutoff")]
    NoTestSamples,
    #[error("invalid model document: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) | Error::RankTooLarge { .. } => ErrorKind::Usage,
            Error::DegenerateStep
            | Error::InfeasibleSimplex(_)
            | Error::NonFinite
            | Error::OracleDimensionLimit(_)
            | Error::ShapeMismatch(_) => ErrorKind::Solver,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn parse(line: u64, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
