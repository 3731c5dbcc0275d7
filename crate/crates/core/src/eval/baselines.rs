//! Reference imputers. Neither respects the budget on its own; pass their
//! output through [`budget_rescale`] before comparing with the solver.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::solver::observed_residual;

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

fn row_medians(x: ArrayView2<f64>, mask: ArrayView2<bool>) -> Vec<f64> {
    x.axis_iter(Axis(0))
        .zip(mask.axis_iter(Axis(0)))
        .map(|(xr, mr)| {
            let mut observed: Vec<f64> = xr.iter().zip(mr.iter()).filter(|(_, &o)| o).map(|(v, _)| *v).collect();
            median(&mut observed).unwrap_or(0.0)
        })
        .collect()
}

/// Fills each missing cell with the median of its row's observed cells, or 0
/// when the row has none.
pub fn median_baseline(x: ArrayView2<f64>, mask: ArrayView2<bool>) -> Array2<f64> {
    let medians = row_medians(x, mask);
    let mut out = x.to_owned();
    for ((m, _), v) in out.indexed_iter_mut().filter(|((m, n), _)| !mask[[*m, *n]]) {
        *v = medians[m];
    }
    out
}

/// Euclidean distance over co-observed rows, scaled by
/// `sqrt(rows / co-observed rows)`; infinite when nothing is co-observed.
pub fn nan_euclidean(x: ArrayView2<f64>, mask: ArrayView2<bool>, a: usize, b: usize) -> f64 {
    let rows = x.nrows();
    let mut shared = 0usize;
    let mut sq = 0.0;
    for m in 0..rows {
        if mask[[m, a]] && mask[[m, b]] {
            shared += 1;
            let d = x[[m, a]] - x[[m, b]];
            sq += d * d;
        }
    }
    if shared == 0 {
        return f64::INFINITY;
    }
    (sq * rows as f64 / shared as f64).sqrt()
}

/// K-nearest-neighbour imputation across columns.
///
/// A missing cell `(m, n)` becomes the unweighted mean of row `m` over the `k`
/// nearest columns (by [`nan_euclidean`], ties to the lower index) that are
/// observed at row `m`. Cells with no such column fall back to the row median.
pub fn knn_baseline(x: ArrayView2<f64>, mask: ArrayView2<bool>, k: usize) -> Result<Array2<f64>> {
    if k < 1 {
        return Err(Error::InvalidConfig("knn k must be at least 1".into()));
    }
    if x.dim() != mask.dim() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", x.dim(), mask.dim())));
    }
    let (rows, cols) = x.dim();
    let medians = row_medians(x, mask);
    let mut out = x.to_owned();
    let mut neighbours: Vec<(f64, usize)> = Vec::with_capacity(cols);

    for n in 0..cols {
        if (0..rows).all(|m| mask[[m, n]]) {
            continue;
        }
        let dist: Vec<f64> = (0..cols)
            .map(|j| {
                if j == n {
                    f64::INFINITY
                } else {
                    nan_euclidean(x, mask, n, j)
                }
            })
            .collect();
        for m in (0..rows).filter(|&m| !mask[[m, n]]) {
            neighbours.clear();
            neighbours.extend((0..cols).filter(|&j| j != n && mask[[m, j]]).map(|j| (dist[j], j)));
            out[[m, n]] = if neighbours.is_empty() {
                medians[m]
            } else {
                neighbours.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let take = k.min(neighbours.len());
                neighbours[..take].iter().map(|&(_, j)| x[[m, j]]).sum::<f64>() / take as f64
            };
        }
    }
    Ok(out)
}

/// Makes a completed matrix budget-feasible: per column, missing predictions
/// are clamped at 0 and scaled to sum to the residual budget fraction (spread
/// evenly when they are all 0). Observed cells are reset to `x`.
pub fn budget_rescale(completed: ArrayView2<f64>, x: ArrayView2<f64>, mask: ArrayView2<bool>) -> Result<Array2<f64>> {
    if completed.dim() != x.dim() || x.dim() != mask.dim() {
        return Err(Error::ShapeMismatch(format!(
            "completed {:?}, data {:?}, mask {:?}",
            completed.dim(),
            x.dim(),
            mask.dim()
        )));
    }
    let rows = x.nrows();
    let mut out = completed.to_owned();
    for n in 0..x.ncols() {
        let residual = observed_residual(x.column(n), mask.column(n), n)?;
        let missing: Vec<usize> = (0..rows).filter(|&m| !mask[[m, n]]).collect();
        for m in (0..rows).filter(|&m| mask[[m, n]]) {
            out[[m, n]] = x[[m, n]];
        }
        if missing.is_empty() {
            continue;
        }
        let clamped: Vec<f64> = missing
            .iter()
            .map(|&m| {
                let v = completed[[m, n]];
                if v.is_finite() {
                    v.max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = clamped.iter().sum();
        for (&m, &v) in missing.iter().zip(&clamped) {
            out[[m, n]] = if total > 0.0 {
                v * residual / total
            } else {
                residual / missing.len() as f64
            };
        }
    }
    Ok(out)
}
