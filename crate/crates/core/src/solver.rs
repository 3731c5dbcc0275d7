//! The triple-simplex completion solver.
//!
//! Minimizes `||W H^T - Z||_F^2` over
//!
//! * `W` (M x F) with every column on the unit simplex,
//! * `H` (N x F) with every row on the unit simplex,
//! * `Z` (M x N) with every column on the unit simplex and the observed cells
//!   pinned to `X`,
//!
//! by inexact block coordinate descent: one extrapolated prox-linear step on
//! `W`, one on `H`, and an exact minimization over `Z`, which decouples into a
//! scaled-simplex projection per column. Each iteration costs `O(M N F)`.
//!
//! Block gradients are those of the half loss `0.5 * ||W H^T - Z||^2`, whose
//! Lipschitz constants are the largest eigenvalues of the F x F Gram matrices.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::largest_eigenvalue;
use crate::simplex::project_in_place;

/// Observed sums may exceed 1 by this much before being rejected.
pub const RESIDUAL_CLAMP: f64 = 1e-6;

/// Which point the gradient step starts from in the W and H updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientBase {
    /// Step from the extrapolated point (standard accelerated prox-linear).
    #[default]
    Extrapolated,
    /// Step from the current iterate while evaluating the gradient at the
    /// extrapolated point.
    Current,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when the objective decrease between iterations falls below this.
    pub tol: f64,
    pub seed: u64,
    pub gradient_base: GradientBase,
    /// Redo an iteration without extrapolation when the objective increased.
    pub monotone_safeguard: bool,
    pub step_floor: f64,
    /// Measure the decrease relative to the previous objective.
    pub relative_tol: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            rank: 3,
            max_iters: 100,
            tol: 1e-4,
            seed: 42,
            gradient_base: GradientBase::Extrapolated,
            monotone_safeguard: true,
            step_floor: 1e-12,
            relative_tol: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tol must be non-negative, got {}",
                self.tol
            )));
        }
        if !(self.step_floor > 0.0 && self.step_floor.is_finite()) {
            return Err(Error::InvalidConfig("step_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Pattern dictionary `w` (M x F, simplex columns) and project embeddings
/// `h` (N x F, simplex rows).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
}

impl FactorModel {
    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    /// Checks both simplex constraints with sum tolerance `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        let on_simplex = |v: ArrayView1<f64>| v.iter().all(|&x| x >= 0.0) && (v.sum() - 1.0).abs() <= tol;
        self.w.axis_iter(Axis(1)).all(on_simplex) && self.h.axis_iter(Axis(0)).all(on_simplex)
    }

    /// `W H^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.w.dot(&self.h.t())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionState {
    pub z: Array2<f64>,
    pub w_prev: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub t_prev: f64,
    pub t_cur: f64,
    pub iteration: usize,
    /// Objective before the first iteration followed by one value per iteration.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FactorModel,
    pub z: Array2<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// True iff the tolerance test fired before `max_iters` ran out.
    pub converged: bool,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

fn check_shapes(x: ArrayView2<f64>, mask: ArrayView2<bool>) -> Result<()> {
    if x.dim() != mask.dim() {
        return Err(Error::ShapeMismatch(format!(
            "data is {:?} but mask is {:?}",
            x.dim(),
            mask.dim()
        )));
    }
    if x.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

/// `1 - sum of observed entries` of column `column`, clamped to 0 inside the
/// `RESIDUAL_CLAMP` window.
pub fn observed_residual(x: ArrayView1<f64>, mask: ArrayView1<bool>, column: usize) -> Result<f64> {
    let sum: f64 = x.iter().zip(mask.iter()).filter(|(_, &m)| m).map(|(v, _)| *v).sum();
    let residual = 1.0 - sum;
    if residual < -RESIDUAL_CLAMP {
        return Err(Error::BudgetExceeded { column, sum });
    }
    Ok(residual.max(0.0))
}

fn normalize_or_project(v: &mut [f64]) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter_mut().for_each(|x| *x /= sum);
        Ok(())
    } else {
        project_in_place(v, 1.0)
    }
}

fn project_columns(a: &mut Array2<f64>) -> Result<()> {
    let mut buf = vec![0.0; a.nrows()];
    for mut col in a.axis_iter_mut(Axis(1)) {
        buf.iter_mut().zip(col.iter()).for_each(|(b, &v)| *b = v);
        project_in_place(&mut buf, 1.0)?;
        col.iter_mut().zip(&buf).for_each(|(c, &b)| *c = b);
    }
    Ok(())
}

fn project_rows(a: &mut Array2<f64>) -> Result<()> {
    for mut row in a.axis_iter_mut(Axis(0)) {
        match row.as_slice_mut() {
            Some(slice) => project_in_place(slice, 1.0)?,
            None => {
                let mut buf = row.to_vec();
                project_in_place(&mut buf, 1.0)?;
                row.iter_mut().zip(&buf).for_each(|(c, &b)| *c = b);
            }
        }
    }
    Ok(())
}

/// Draws seeded uniform factors, normalizes them onto their simplexes and
/// fills each column's missing cells with an even share of its residual.
pub fn initialize(
    x: ArrayView2<f64>,
    mask: ArrayView2<bool>,
    config: &FitConfig,
) -> Result<(FactorModel, CompletionState)> {
    config.validate()?;
    check_shapes(x, mask)?;
    let (m, n) = x.dim();
    let f = config.rank;
    if f >= m.min(n) {
        return Err(Error::RankTooLarge { rank: f, m, n });
    }

    let mut z = Array2::<f64>::zeros((m, n));
    for (col, (xc, mc)) in x.axis_iter(Axis(1)).zip(mask.axis_iter(Axis(1))).enumerate() {
        for (row, (&v, &obs)) in xc.iter().zip(mc.iter()).enumerate() {
            if obs && !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidEntry { row, column: col });
            }
        }
        let residual = observed_residual(xc, mc, col)?;
        let missing = mc.iter().filter(|&&o| !o).count();
        if missing == 0 && residual > RESIDUAL_CLAMP {
            return Err(Error::UnplacedMass {
                project: format!("column {col}"),
                residual,
            });
        }
        let share = if missing > 0 { residual / missing as f64 } else { 0.0 };
        for row in 0..m {
            z[[row, col]] = if mc[row] { xc[row] } else { share };
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = Array2::from_shape_simple_fn((m, f), || rng.random::<f64>());
    let mut h = Array2::from_shape_simple_fn((n, f), || rng.random::<f64>());
    for mut col in w.axis_iter_mut(Axis(1)) {
        let mut buf = col.to_vec();
        normalize_or_project(&mut buf)?;
        col.iter_mut().zip(&buf).for_each(|(c, &b)| *c = b);
    }
    for mut row in h.axis_iter_mut(Axis(0)) {
        let mut buf = row.to_vec();
        normalize_or_project(&mut buf)?;
        row.iter_mut().zip(&buf).for_each(|(c, &b)| *c = b);
    }

    let state = CompletionState {
        z,
        w_prev: w.clone(),
        h_prev: h.clone(),
        t_prev: 0.0,
        t_cur: 1.0,
        iteration: 0,
        objective_trace: Vec::new(),
    };
    Ok((FactorModel { w, h }, state))
}

/// `||W H^T - Z||_F^2`.
pub fn objective(w: ArrayView2<f64>, h: ArrayView2<f64>, z: ArrayView2<f64>) -> Result<f64> {
    if w.ncols() != h.ncols() || w.nrows() != z.nrows() || h.nrows() != z.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "W {:?}, H {:?}, Z {:?}",
            w.dim(),
            h.dim(),
            z.dim()
        )));
    }
    let mut residual = w.dot(&h.t());
    residual -= &z;
    Ok(residual.iter().map(|r| r * r).sum())
}

/// Advances the momentum sequence: returns `(t_next, beta)` with
/// `t_next = (1 + sqrt(4 t_cur^2 + 1)) / 2` and `beta = (t_cur - 1) / t_next`.
pub fn nesterov_step(_t_prev: f64, t_cur: f64) -> (f64, f64) {
    let t_next = (1.0 + (4.0 * t_cur * t_cur + 1.0).sqrt()) / 2.0;
    let beta = ((t_cur - 1.0) / t_next).max(0.0);
    (t_next, beta)
}

/// Gradient of `0.5 * ||W H^T - Z||^2` with respect to `W`.
pub fn w_gradient(w: ArrayView2<f64>, h: ArrayView2<f64>, z: ArrayView2<f64>) -> Array2<f64> {
    let gram = h.t().dot(&h);
    let mut g = w.dot(&gram);
    g -= &z.dot(&h);
    g
}

/// Gradient of `0.5 * ||W H^T - Z||^2` with respect to `H`.
pub fn h_gradient(h: ArrayView2<f64>, w: ArrayView2<f64>, z: ArrayView2<f64>) -> Array2<f64> {
    let gram = w.t().dot(&w);
    let mut g = h.dot(&gram);
    g -= &z.t().dot(&w);
    g
}

/// Step size for a block whose partner factor is `partner`: the largest
/// eigenvalue of `partner^T partner`, floored.
pub fn step_size(partner: ArrayView2<f64>, floor: f64) -> f64 {
    let gram = partner.t().dot(&partner);
    largest_eigenvalue(gram.view()).max(floor)
}

fn extrapolate(cur: ArrayView2<f64>, prev: ArrayView2<f64>, beta: f64) -> Array2<f64> {
    if beta == 0.0 {
        return cur.to_owned();
    }
    let mut out = cur.to_owned();
    Zip::from(&mut out)
        .and(&cur)
        .and(&prev)
        .for_each(|o, &c, &p| *o = c + beta * (c - p));
    out
}

fn gradient_step(
    cur: ArrayView2<f64>,
    hat: Array2<f64>,
    grad: Array2<f64>,
    gamma: f64,
    base: GradientBase,
) -> Result<Array2<f64>> {
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::DegenerateStep);
    }
    let mut bar = match base {
        GradientBase::Extrapolated => hat,
        GradientBase::Current => cur.to_owned(),
    };
    bar.scaled_add(-1.0 / gamma, &grad);
    if bar.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateStep);
    }
    Ok(bar)
}

/// One prox-linear step on `W`; every returned column is on the unit simplex.
pub fn update_w(
    w: ArrayView2<f64>,
    w_prev: ArrayView2<f64>,
    h: ArrayView2<f64>,
    z: ArrayView2<f64>,
    beta: f64,
    config: &FitConfig,
) -> Result<Array2<f64>> {
    let w_hat = extrapolate(w, w_prev, beta);
    let grad = w_gradient(w_hat.view(), h, z);
    let gamma = step_size(h, config.step_floor);
    let mut out = gradient_step(w, w_hat, grad, gamma, config.gradient_base)?;
    project_columns(&mut out)?;
    Ok(out)
}

/// One prox-linear step on `H` against the freshly updated `W`; every
/// returned row is on the unit simplex.
pub fn update_h(
    h: ArrayView2<f64>,
    h_prev: ArrayView2<f64>,
    w: ArrayView2<f64>,
    z: ArrayView2<f64>,
    beta: f64,
    config: &FitConfig,
) -> Result<Array2<f64>> {
    let h_hat = extrapolate(h, h_prev, beta);
    let grad = h_gradient(h_hat.view(), w, z);
    let gamma = step_size(w, config.step_floor);
    let mut out = gradient_step(h, h_hat, grad, gamma, config.gradient_base)?;
    project_rows(&mut out)?;
    Ok(out)
}

/// Exact minimization over `Z`: observed cells copy `X`, and the low-rank
/// prediction on each column's missing rows is projected onto the simplex
/// whose total is the column's residual budget fraction.
pub fn update_z(
    w: ArrayView2<f64>,
    h: ArrayView2<f64>,
    x: ArrayView2<f64>,
    mask: ArrayView2<bool>,
) -> Result<Array2<f64>> {
    check_shapes(x, mask)?;
    let (m, n) = x.dim();
    if w.nrows() != m || h.nrows() != n || w.ncols() != h.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "W {:?}, H {:?} for data {:?}",
            w.dim(),
            h.dim(),
            x.dim()
        )));
    }

    let mut z = x.to_owned();
    let mut missing_rows = Vec::with_capacity(m);
    let mut prediction = Vec::with_capacity(m);
    for col in 0..n {
        let xc = x.column(col);
        let mc = mask.column(col);
        missing_rows.clear();
        missing_rows.extend((0..m).filter(|&r| !mc[r]));
        if missing_rows.is_empty() {
            continue;
        }
        let residual = observed_residual(xc, mc, col)?;
        let hn = h.row(col);
        prediction.clear();
        prediction.extend(missing_rows.iter().map(|&r| w.row(r).dot(&hn)));
        project_in_place(&mut prediction, residual)?;
        for (&r, &v) in missing_rows.iter().zip(&prediction) {
            z[[r, col]] = v;
        }
    }
    Ok(z)
}

/// Runs the full fit. See [`fit_with_observer`].
pub fn fit(x: ArrayView2<f64>, mask: ArrayView2<bool>, config: &FitConfig) -> Result<FitResult> {
    fit_with_observer(x, mask, config, |_, _| {})
}

/// Runs the fit, calling `observer` after initialization and after every
/// completed iteration.
///
/// Stops when the objective decrease drops below `config.tol` (converged) or
/// after `config.max_iters` iterations.
pub fn fit_with_observer(
    x: ArrayView2<f64>,
    mask: ArrayView2<bool>,
    config: &FitConfig,
    mut observer: impl FnMut(&FactorModel, &CompletionState),
) -> Result<FitResult> {
    let (mut model, mut state) = initialize(x, mask, config)?;
    state
        .objective_trace
        .push(objective(model.w.view(), model.h.view(), state.z.view())?);
    observer(&model, &state);

    let mut converged = false;
    while state.iteration < config.max_iters {
        let previous = *state.objective_trace.last().expect("trace is seeded");
        let (t_next, beta) = nesterov_step(state.t_prev, state.t_cur);

        let (mut w, mut h, mut z) = sweep(&model, &state, x, mask, beta, config)?;
        let mut current = objective(w.view(), h.view(), z.view())?;
        let (mut t_prev, mut t_cur) = (state.t_cur, t_next);

        if config.monotone_safeguard && beta > 0.0 && current > previous {
            (w, h, z) = sweep(&model, &state, x, mask, 0.0, config)?;
            current = objective(w.view(), h.view(), z.view())?;
            (t_prev, t_cur) = (0.0, 1.0);
        }

        state.w_prev = std::mem::replace(&mut model.w, w);
        state.h_prev = std::mem::replace(&mut model.h, h);
        state.z = z;
        state.t_prev = t_prev;
        state.t_cur = t_cur;
        state.iteration += 1;
        state.objective_trace.push(current);
        observer(&model, &state);

        let mut decrease = (previous - current).max(0.0);
        if config.relative_tol && previous > 0.0 {
            decrease /= previous;
        }
        if decrease < config.tol {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        model,
        z: state.z,
        objective_trace: state.objective_trace,
        iterations: state.iteration,
        converged,
    })
}

type Blocks = (Array2<f64>, Array2<f64>, Array2<f64>);

fn sweep(
    model: &FactorModel,
    state: &CompletionState,
    x: ArrayView2<f64>,
    mask: ArrayView2<bool>,
    beta: f64,
    config: &FitConfig,
) -> Result<Blocks> {
    let w = update_w(
        model.w.view(),
        state.w_prev.view(),
        model.h.view(),
        state.z.view(),
        beta,
        config,
    )?;
    let h = update_h(
        model.h.view(),
        state.h_prev.view(),
        w.view(),
        state.z.view(),
        beta,
        config,
    )?;
    let z = update_z(w.view(), h.view(), x, mask)?;
    Ok((w, h, z))
}

/// Scales column `n` of `z` by `budgets[n]`, turning fractions into expenses.
pub fn denormalize(z: ArrayView2<f64>, budgets: &[f64]) -> Result<Array2<f64>> {
    if budgets.len() != z.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{} budgets for {} columns",
            budgets.len(),
            z.ncols()
        )));
    }
    if let Some((column, &budget)) = budgets.iter().enumerate().find(|(_, b)| !(b.is_finite() && **b > 0.0)) {
        return Err(Error::NonPositiveBudget { column, budget });
    }
    let mut out = z.to_owned();
    for (mut col, &b) in out.axis_iter_mut(Axis(1)).zip(budgets) {
        col.mapv_inplace(|v| v * b);
    }
    Ok(out)
}
