//! Held-out evaluation of the solver against simple imputers.
//!
//! Every method produces a budget-feasible fraction matrix, which is scaled
//! back to currency units and scored on the withheld cells only.

pub mod baselines;
pub mod metrics;
pub mod patterns;
pub mod synth;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::ExpenseMatrix;
use crate::error::{Error, Result};
use crate::solver::{denormalize, fit, FitConfig};

pub use baselines::{budget_rescale, knn_baseline, median_baseline};
pub use metrics::{relative_rmse, rmse};
pub use patterns::{cluster_assign, cumulative_patterns};
pub use synth::{synthesize, synthesize_with_layout, MaskLayout, SyntheticInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Tsmc,
    Median,
    Knn,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsmc" => Ok(Method::Tsmc),
            "median" => Ok(Method::Median),
            "knn" => Ok(Method::Knn),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tsmc => "tsmc",
            Method::Median => "median",
            Method::Knn => "knn",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub rmse: f64,
    pub relative_rmse: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub fit: FitConfig,
    pub knn_k: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            knn_k: 10,
        }
    }
}

/// Budget-feasible completed fractions for one method.
pub fn complete(matrix: &ExpenseMatrix, method: Method, options: &EvalOptions) -> Result<Array2<f64>> {
    let (x, mask) = (matrix.x.view(), matrix.mask.view());
    match method {
        Method::Tsmc => Ok(fit(x, mask, &options.fit)?.z),
        Method::Median => budget_rescale(median_baseline(x, mask).view(), x, mask),
        Method::Knn => budget_rescale(knn_baseline(x, mask, options.knn_k)?.view(), x, mask),
    }
}

/// Scores absolute expense forecasts on the withheld cells.
pub fn score(matrix: &ExpenseMatrix, method: &str, expenses: &Array2<f64>) -> Result<EvalReport> {
    if matrix.held_out.is_empty() {
        return Err(Error::NoTestSamples);
    }
    let truth: Vec<f64> = matrix.held_out.iter().map(|c| c.expense).collect();
    let estimate: Vec<f64> = matrix.held_out.iter().map(|c| expenses[[c.row, c.column]]).collect();
    Ok(EvalReport {
        method: method.to_string(),
        rmse: rmse(&truth, &estimate)?,
        relative_rmse: relative_rmse(&truth, &estimate)?,
        n_test: truth.len(),
    })
}

/// Runs every method and scores it, in the order given.
pub fn evaluate(matrix: &ExpenseMatrix, methods: &[Method], options: &EvalOptions) -> Result<Vec<EvalReport>> {
    if matrix.held_out.is_empty() {
        return Err(Error::NoTestSamples);
    }
    methods
        .iter()
        .map(|&method| {
            let fractions = complete(matrix, method, options)?;
            let expenses = denormalize(fractions.view(), &matrix.budgets)?;
            score(matrix, &method.to_string(), &expenses)
        })
        .collect()
}
