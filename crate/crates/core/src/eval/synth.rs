//! Seeded synthetic low-rank expense data with known factors.

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::data::{ExpenseMatrix, ExpenseRecord, HeldOutCell, ProjectMeta, ProjectStatus};
use crate::error::{Error, Result};

pub const BUDGET_MIN: f64 = 1e4;
pub const BUDGET_MAX: f64 = 1e7;

/// Where each column's missing cells go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskLayout {
    /// The last `ceil(missing_rate * M)` rows of every column.
    #[default]
    Tail,
    /// A tail whose length varies per column, uniform on
    /// `1..=2 * ceil(missing_rate * M) - 1` (capped at `M - 1`), so that
    /// different projects are observed up to different months.
    StaggeredTail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    /// `w_true . h_true^T`; every column sums to 1.
    pub x_full: Array2<f64>,
    pub mask: Array2<bool>,
    pub budgets: Vec<f64>,
    pub w_true: Array2<f64>,
    pub h_true: Array2<f64>,
}

fn flat_simplex_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sum);
    v
}

/// Tail length used by [`MaskLayout::Tail`].
pub fn tail_length(m: usize, missing_rate: f64) -> usize {
    (missing_rate * m as f64).ceil() as usize
}

/// [`synthesize_with_layout`] with [`MaskLayout::Tail`].
pub fn synthesize(m: usize, n: usize, f: usize, missing_rate: f64, seed: u64) -> Result<SyntheticInstance> {
    synthesize_with_layout(m, n, f, missing_rate, seed, MaskLayout::Tail)
}

/// Draws simplex factors from the flat Dirichlet distribution, log-uniform
/// budgets in `[1e4, 1e7]` and a missing tail per column.
pub fn synthesize_with_layout(
    m: usize,
    n: usize,
    f: usize,
    missing_rate: f64,
    seed: u64,
    layout: MaskLayout,
) -> Result<SyntheticInstance> {
    if f == 0 {
        return Err(Error::InvalidConfig("rank must be at least 1".into()));
    }
    if f >= m.min(n) {
        return Err(Error::RankTooLarge { rank: f, m, n });
    }
    if !(0.0..1.0).contains(&missing_rate) {
        return Err(Error::InvalidConfig(format!(
            "missing rate must be in [0, 1), got {missing_rate}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w_true = Array2::<f64>::zeros((m, f));
    for mut col in w_true.axis_iter_mut(Axis(1)) {
        let point = flat_simplex_point(&mut rng, m);
        col.iter_mut().zip(point).for_each(|(c, p)| *c = p);
    }
    let mut h_true = Array2::<f64>::zeros((n, f));
    for mut row in h_true.axis_iter_mut(Axis(0)) {
        let point = flat_simplex_point(&mut rng, f);
        row.iter_mut().zip(point).for_each(|(c, p)| *c = p);
    }
    let (lo, hi) = (BUDGET_MIN.ln(), BUDGET_MAX.ln());
    let budgets: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi).exp()).collect();

    let tail = tail_length(m, missing_rate).min(m);
    let mut mask = Array2::from_elem((m, n), true);
    for col in 0..n {
        let len = match layout {
            MaskLayout::Tail => tail,
            MaskLayout::StaggeredTail if tail == 0 => 0,
            MaskLayout::StaggeredTail => rng.random_range(1..=(2 * tail - 1)).min(m - 1),
        };
        for row in (m - len)..m {
            mask[[row, col]] = false;
        }
    }

    Ok(SyntheticInstance {
        x_full: w_true.dot(&h_true.t()),
        mask,
        budgets,
        w_true,
        h_true,
    })
}

impl SyntheticInstance {
    pub fn project_ids(&self) -> Vec<String> {
        (0..self.x_full.ncols()).map(|n| format!("P{n:04}")).collect()
    }

    /// Ongoing projects whose targeted end date is the last month, so the
    /// ledgers re-ingest with the full horizon.
    pub fn projects(&self) -> Vec<ProjectMeta> {
        let last = self.x_full.nrows() - 1;
        self.project_ids()
            .into_iter()
            .zip(&self.budgets)
            .map(|(project_id, &budget)| ProjectMeta {
                project_id,
                budget,
                ted: Some(last),
                status: ProjectStatus::Ongoing,
            })
            .collect()
    }

    /// Absolute expenses of every cell, or only of the observed ones.
    pub fn records(&self, observed_only: bool) -> Vec<ExpenseRecord> {
        let ids = self.project_ids();
        let mut out = Vec::new();
        for (col, id) in ids.iter().enumerate() {
            for row in 0..self.x_full.nrows() {
                if observed_only && !self.mask[[row, col]] {
                    continue;
                }
                out.push(ExpenseRecord {
                    project_id: id.clone(),
                    month_index: row,
                    expense: self.x_full[[row, col]] * self.budgets[col],
                });
            }
        }
        out
    }

    /// The training matrix with every missing cell held out as ground truth.
    pub fn to_expense_matrix(&self) -> ExpenseMatrix {
        let (m, n) = self.x_full.dim();
        let mut x = self.x_full.clone();
        let mut held_out = Vec::new();
        for col in 0..n {
            for row in 0..m {
                if !self.mask[[row, col]] {
                    x[[row, col]] = 0.0;
                    held_out.push(HeldOutCell {
                        column: col,
                        row,
                        expense: self.x_full[[row, col]] * self.budgets[col],
                    });
                }
            }
        }
        ExpenseMatrix {
            x,
            mask: self.mask.clone(),
            budgets: self.budgets.clone(),
            project_ids: self.project_ids(),
            horizon: m,
            completed_count: 0,
            held_out,
        }
    }
}
