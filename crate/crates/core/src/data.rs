//! Turning per-project expense ledgers into the budget-normalized fraction
//! matrix and observation mask the solver works on.
//!
//! Row `m` of the matrix is month `m` of a project's life and column `n` is
//! project `n`, in the order the project metadata lists them.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{observed_residual, RESIDUAL_CLAMP};

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidDate(format!("{year}-{month:02}")));
        }
        Ok(Self { year, month })
    }

    /// Months elapsed since `epoch`.
    pub fn months_since(&self, epoch: YearMonth) -> Result<usize> {
        month_index(self.year, self.month, epoch.year, epoch.month)
    }

    /// The month `offset` months after this one.
    pub fn plus_months(&self, offset: usize) -> YearMonth {
        let total = self.year as i64 * 12 + (self.month as i64 - 1) + offset as i64;
        YearMonth {
            year: total.div_euclid(12) as i32,
            month: total.rem_euclid(12) as u32 + 1,
        }
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDate(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).map_err(|_| bad())
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// `(year - epoch_year) * 12 + (month - epoch_month)`.
pub fn month_index(year: i32, month: u32, epoch_year: i32, epoch_month: u32) -> Result<usize> {
    for (y, m) in [(year, month), (epoch_year, epoch_month)] {
        if !(1..=12).contains(&m) {
            return Err(Error::InvalidDate(format!("{y}-{m:02}")));
        }
    }
    let months = (year as i64 - epoch_year as i64) * 12 + (month as i64 - epoch_month as i64);
    if months < 0 {
        return Err(Error::DateBeforeEpoch {
            year,
            month,
            epoch_year,
            epoch_month,
        });
    }
    Ok(months as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectStatus {
    Completed,
    Ongoing,
}

impl FromStr for ProjectStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "completed" => Ok(ProjectStatus::Completed),
            "ongoing" => Ok(ProjectStatus::Ongoing),
            other => Err(Error::InvalidConfig(format!(
                "status must be completed or ongoing, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for ProjectStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectStatus::Completed => "completed",
            ProjectStatus::Ongoing => "ongoing",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpenseRecord {
    pub project_id: String,
    pub month_index: usize,
    pub expense: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectMeta {
    pub project_id: String,
    pub budget: f64,
    /// Targeted end date as a month index; months after it carry no spend.
    pub ted: Option<usize>,
    pub status: ProjectStatus,
}

/// A cell withheld by the cutoff, kept as ground truth in currency units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldOutCell {
    pub column: usize,
    pub row: usize,
    pub expense: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpenseMatrix {
    /// Budget fractions; zero wherever `mask` is false.
    pub x: Array2<f64>,
    /// `true` for observed cells.
    pub mask: Array2<bool>,
    pub budgets: Vec<f64>,
    pub project_ids: Vec<String>,
    pub horizon: usize,
    pub completed_count: usize,
    /// Sorted by `(column, row)`.
    pub held_out: Vec<HeldOutCell>,
}

impl ExpenseMatrix {
    pub fn n_projects(&self) -> usize {
        self.x.ncols()
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn missing_count(&self) -> usize {
        self.mask.len() - self.observed_count()
    }

    /// Unspent budget fraction of column `n`.
    pub fn residual_fraction(&self, n: usize) -> Result<f64> {
        residual_fraction(self, n)
    }
}

/// `1 - sum of observed fractions` for column `n`, clamped to 0 within the
/// tolerance window.
pub fn residual_fraction(matrix: &ExpenseMatrix, n: usize) -> Result<f64> {
    if n >= matrix.n_projects() {
        return Err(Error::ShapeMismatch(format!("column {n} of {}", matrix.n_projects())));
    }
    observed_residual(matrix.x.column(n), matrix.mask.column(n), n).map_err(|e| match e {
        Error::BudgetExceeded { sum, .. } => Error::OverBudget {
            project: matrix.project_ids[n].clone(),
            sum,
        },
        other => other,
    })
}

/// Builds the matrix from one ledger, withholding every record at or after
/// `cutoff` (when given) as evaluation ground truth.
pub fn assemble(
    records: &[ExpenseRecord],
    meta: &[ProjectMeta],
    horizon: Option<usize>,
    cutoff: Option<usize>,
) -> Result<ExpenseMatrix> {
    let (held, train): (Vec<ExpenseRecord>, Vec<ExpenseRecord>) = records
        .iter()
        .cloned()
        .partition(|r| cutoff.is_some_and(|c| r.month_index >= c));
    assemble_split(&train, &held, meta, horizon)
}

#[derive(Default)]
struct ColumnLedger {
    observed: HashMap<usize, Vec<f64>>,
    held: HashMap<usize, Vec<f64>>,
}

fn order_independent_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

/// Builds the matrix from training records plus already-withheld records.
///
/// Per project:
/// * months from the first to the last training record are observed, and
///   months inside that window without a record are observed zeros;
/// * a completed project is observed over the whole horizon (trailing zeros);
/// * an ongoing project with a TED has observed zeros strictly after the TED,
///   and every other month outside the training window is missing;
/// * withheld cells are always missing, and a project with withheld records
///   counts as ongoing.
///
/// Duplicate `(project, month)` records are summed.
pub fn assemble_split(
    train: &[ExpenseRecord],
    held_out: &[ExpenseRecord],
    meta: &[ProjectMeta],
    horizon: Option<usize>,
) -> Result<ExpenseMatrix> {
    let mut column_of = HashMap::with_capacity(meta.len());
    for (n, p) in meta.iter().enumerate() {
        if column_of.insert(p.project_id.as_str(), n).is_some() {
            return Err(Error::DuplicateProject(p.project_id.clone()));
        }
        if !(p.budget.is_finite() && p.budget > 0.0) {
            return Err(Error::NonPositiveBudget {
                column: n,
                budget: p.budget,
            });
        }
    }
    if meta.is_empty() {
        return Err(Error::Empty);
    }

    let mut ledgers: Vec<ColumnLedger> = (0..meta.len()).map(|_| ColumnLedger::default()).collect();
    let mut needed = 0usize;
    for (records, is_held) in [(train, false), (held_out, true)] {
        for r in records {
            let &n = column_of
                .get(r.project_id.as_str())
                .ok_or_else(|| Error::UnknownProject(r.project_id.clone()))?;
            if !(r.expense.is_finite() && r.expense >= 0.0) {
                return Err(Error::InvalidEntry {
                    row: r.month_index,
                    column: n,
                });
            }
            needed = needed.max(r.month_index + 1);
            let target = if is_held {
                &mut ledgers[n].held
            } else {
                &mut ledgers[n].observed
            };
            target.entry(r.month_index).or_default().push(r.expense);
        }
    }
    for p in meta {
        if let Some(t) = p.ted {
            needed = needed.max(t + 1);
        }
    }

    let m = match horizon {
        Some(h) => {
            if let Some((project, month)) = first_beyond(train, held_out, meta, h) {
                return Err(Error::OutsideHorizon {
                    project,
                    month,
                    horizon: h,
                });
            }
            h
        }
        None => needed,
    };
    if m == 0 {
        return Err(Error::Empty);
    }

    let n_cols = meta.len();
    let mut x = Array2::<f64>::zeros((m, n_cols));
    let mut mask = Array2::<bool>::from_elem((m, n_cols), false);
    let mut held_cells = Vec::new();
    let mut completed_count = 0;

    for (n, (p, ledger)) in meta.iter().zip(ledgers.iter_mut()).enumerate() {
        let mut held_rows: Vec<usize> = ledger.held.keys().copied().collect();
        held_rows.sort_unstable();
        for &row in &held_rows {
            if ledger.observed.contains_key(&row) {
                return Err(Error::InvalidConfig(format!(
                    "month {row} of project {:?} is both observed and withheld",
                    p.project_id
                )));
            }
            let expense = order_independent_sum(ledger.held.get_mut(&row).expect("key exists"));
            held_cells.push(HeldOutCell {
                column: n,
                row,
                expense,
            });
        }

        let completed = p.status == ProjectStatus::Completed && held_rows.is_empty();
        if completed {
            completed_count += 1;
        }
        let first = ledger.observed.keys().min().copied();
        let last = ledger.observed.keys().max().copied();

        for row in 0..m {
            let observed = if ledger.held.contains_key(&row) {
                false
            } else if completed {
                true
            } else {
                let in_window = matches!((first, last), (Some(a), Some(b)) if (a..=b).contains(&row));
                in_window || p.ted.is_some_and(|t| row > t)
            };
            mask[[row, n]] = observed;
            if observed {
                if let Some(values) = ledger.observed.get_mut(&row) {
                    x[[row, n]] = order_independent_sum(values) / p.budget;
                }
            }
        }

        let sum: f64 = x.column(n).sum();
        if sum > 1.0 + RESIDUAL_CLAMP {
            return Err(Error::OverBudget {
                project: p.project_id.clone(),
                sum,
            });
        }
        let any_missing = mask.column(n).iter().any(|&o| !o);
        if !completed && !any_missing && sum < 1.0 - RESIDUAL_CLAMP {
            return Err(Error::UnplacedMass {
                project: format!("project {:?}", p.project_id),
                residual: 1.0 - sum,
            });
        }
        if completed && sum < 1.0 - RESIDUAL_CLAMP {
            return Err(Error::BudgetNotExhausted {
                project: p.project_id.clone(),
                sum,
            });
        }
    }

    Ok(ExpenseMatrix {
        x,
        mask,
        budgets: meta.iter().map(|p| p.budget).collect(),
        project_ids: meta.iter().map(|p| p.project_id.clone()).collect(),
        horizon: m,
        completed_count,
        held_out: held_cells,
    })
}

fn first_beyond(
    train: &[ExpenseRecord],
    held_out: &[ExpenseRecord],
    meta: &[ProjectMeta],
    horizon: usize,
) -> Option<(String, usize)> {
    train
        .iter()
        .chain(held_out)
        .find(|r| r.month_index >= horizon)
        .map(|r| (r.project_id.clone(), r.month_index))
        .or_else(|| {
            meta.iter()
                .find(|p| p.ted.is_some_and(|t| t >= horizon))
                .map(|p| (p.project_id.clone(), p.ted.unwrap_or_default()))
        })
}

/// Observed-cell count per column.
pub fn observed_per_column(mask: &Array2<bool>) -> Vec<usize> {
    mask.axis_iter(Axis(1))
        .map(|c| c.iter().filter(|&&o| o).count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, month: usize, expense: f64) -> ExpenseRecord {
        ExpenseRecord {
            project_id: id.into(),
            month_index: month,
            expense,
        }
    }

    fn meta(id: &str, budget: f64, ted: Option<usize>, status: ProjectStatus) -> ProjectMeta {
        ProjectMeta {
            project_id: id.into(),
            budget,
            ted,
            status,
        }
    }

    #[test]
    fn month_index_examples() {
        assert_eq!(month_index(2012, 12, 2012, 12).unwrap(), 0);
        assert_eq!(month_index(2013, 3, 2012, 12).unwrap(), 3);
        assert_eq!(month_index(2023, 3, 2012, 12).unwrap(), 123);
        assert!(matches!(
            month_index(2012, 11, 2012, 12),
            Err(Error::DateBeforeEpoch { .. })
        ));
        assert!(month_index(2012, 13, 2012, 12).is_err());
    }

    #[test]
    fn year_month_parsing() {
        let ym: YearMonth = "2021-01".parse().unwrap();
        assert_eq!(ym, YearMonth { year: 2021, month: 1 });
        assert_eq!(ym.to_string(), "2021-01");
        assert_eq!(ym.plus_months(23).to_string(), "2022-12");
        for bad in [
            "2021-1", "2021-13", "21-01", "2021/01", "", "2021-00", "abcd-ef", "+202-01",
        ] {
            assert!(bad.parse::<YearMonth>().is_err(), "{bad}");
        }
    }

    #[test]
    fn completed_project_gets_trailing_zeros() {
        let records: Vec<_> = (0..5).map(|m| rec("a", m, 20.0)).collect();
        let projects = [meta("a", 100.0, None, ProjectStatus::Completed)];
        let mat = assemble(&records, &projects, Some(8), None).unwrap();
        assert!(mat.mask.iter().all(|&o| o));
        assert_eq!(mat.x.column(0).to_vec(), vec![0.2, 0.2, 0.2, 0.2, 0.2, 0.0, 0.0, 0.0]);
        assert_eq!(mat.completed_count, 1);
        assert_eq!(mat.residual_fraction(0).unwrap(), 0.0);
    }

    #[test]
    fn ongoing_with_ted() {
        let records: Vec<_> = (0..4).map(|m| rec("a", m, 10.0)).collect();
        let projects = [meta("a", 100.0, Some(6), ProjectStatus::Ongoing)];
        let mat = assemble(&records, &projects, Some(8), None).unwrap();
        let mask: Vec<bool> = mat.mask.column(0).to_vec();
        assert_eq!(mask, vec![true, true, true, true, false, false, false, true]);
        assert_eq!(mat.x[[7, 0]], 0.0);
        assert!((mat.residual_fraction(0).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ongoing_without_ted() {
        let records: Vec<_> = (0..4).map(|m| rec("a", m, 10.0)).collect();
        let projects = [meta("a", 100.0, None, ProjectStatus::Ongoing)];
        let mat = assemble(&records, &projects, Some(8), None).unwrap();
        let mask: Vec<bool> = mat.mask.column(0).to_vec();
        assert_eq!(mask, vec![true, true, true, true, false, false, false, false]);
    }

    #[test]
    fn late_start_and_interior_gaps() {
        let records = vec![rec("a", 2, 10.0), rec("a", 4, 10.0)];
        let projects = [meta("a", 100.0, None, ProjectStatus::Ongoing)];
        let mat = assemble(&records, &projects, Some(6), None).unwrap();
        let mask: Vec<bool> = mat.mask.column(0).to_vec();
        assert_eq!(mask, vec![false, false, true, true, true, false]);
        assert_eq!(mat.x[[3, 0]], 0.0);
    }

    #[test]
    fn cutoff_withholds_and_reclassifies() {
        let records: Vec<_> = (0..6).map(|m| rec("a", m, 10.0)).chain([rec("a", 6, 40.0)]).collect();
        let projects = [meta("a", 100.0, None, ProjectStatus::Completed)];
        let mat = assemble(&records, &projects, None, Some(4)).unwrap();
        assert_eq!(mat.horizon, 7);
        assert_eq!(mat.completed_count, 0);
        let mask: Vec<bool> = mat.mask.column(0).to_vec();
        assert_eq!(mask, vec![true, true, true, true, false, false, false]);
        let truth: Vec<(usize, f64)> = mat.held_out.iter().map(|c| (c.row, c.expense)).collect();
        assert_eq!(truth, vec![(4, 10.0), (5, 10.0), (6, 40.0)]);
    }

    #[test]
    fn duplicates_sum() {
        let records = vec![rec("a", 0, 30.0), rec("a", 0, 20.0), rec("a", 1, 50.0)];
        let projects = [meta("a", 100.0, None, ProjectStatus::Completed)];
        let mat = assemble(&records, &projects, None, None).unwrap();
        assert_eq!(mat.x.column(0).to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn errors() {
        let projects = [meta("a", 100.0, None, ProjectStatus::Ongoing)];
        assert!(matches!(
            assemble(&[rec("b", 0, 1.0)], &projects, None, None),
            Err(Error::UnknownProject(_))
        ));
        assert!(matches!(
            assemble(&[rec("a", 0, 150.0)], &projects, None, None),
            Err(Error::OverBudget { .. })
        ));
        assert!(matches!(
            assemble(&[rec("a", 9, 1.0)], &projects, Some(5), None),
            Err(Error::OutsideHorizon { .. })
        ));
        let done = [meta("a", 100.0, None, ProjectStatus::Completed)];
        assert!(matches!(
            assemble(&[rec("a", 0, 50.0)], &done, None, None),
            Err(Error::BudgetNotExhausted { .. })
        ));
        assert!(matches!(
            assemble(&[rec("a", 0, 50.0), rec("a", 1, 10.0)], &projects, None, None),
            Err(Error::UnplacedMass { .. })
        ));
        let zero = [meta("a", 0.0, None, ProjectStatus::Ongoing)];
        assert!(matches!(
            assemble(&[rec("a", 0, 1.0)], &zero, None, None),
            Err(Error::NonPositiveBudget { .. })
        ));
    }

    #[test]
    fn residual_fraction_cases() {
        let projects = [
            meta("a", 1.0, None, ProjectStatus::Ongoing),
            meta("b", 1.0, None, ProjectStatus::Ongoing),
        ];
        let records = vec![rec("a", 0, 0.6), rec("b", 0, 1.0 + 1e-7)];
        let mat = assemble(&records, &projects, Some(3), None).unwrap();
        assert!((mat.residual_fraction(0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(mat.residual_fraction(1).unwrap(), 0.0);

        let mut broken = mat.clone();
        broken.x[[0, 1]] = 1.01;
        assert!(matches!(broken.residual_fraction(1), Err(Error::OverBudget { .. })));
    }
}
