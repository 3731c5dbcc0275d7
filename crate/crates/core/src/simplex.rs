//! Euclidean projection onto scaled probability simplexes.
//!
//! Every block update of the solver ends in one of these projections: columns
//! of the pattern dictionary and rows of the embedding matrix go onto the unit
//! simplex, and the missing part of each completed column goes onto a simplex
//! whose total is the column's unspent budget fraction.

use crate::error::{Error, Result};

/// `{ v in R^dim : v >= 0, sum(v) = total }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledSimplex {
    dim: usize,
    total: f64,
}

impl ScaledSimplex {
    pub fn new(dim: usize, total: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        if !total.is_finite() {
            return Err(Error::NonFinite);
        }
        if total < 0.0 {
            return Err(Error::InfeasibleSimplex(total));
        }
        Ok(Self { dim, total })
    }

    /// The unit simplex of dimension `dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(dim, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Membership with sum tolerance `1e-9 * max(1, total)`.
    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.dim
            && v.iter().all(|&x| x >= 0.0)
            && (v.iter().sum::<f64>() - self.total).abs() <= 1e-9 * self.total.max(1.0)
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for simplex of dim {}",
                v.len(),
                self.dim
            )));
        }
        project_onto_scaled_simplex(v, self.total)
    }
}

/// Returns `argmin_{z >= 0, sum(z) = total} ||z - v||`.
pub fn project_onto_scaled_simplex(v: &[f64], total: f64) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    project_in_place(&mut out, total)?;
    Ok(out)
}

/// In-place variant of [`project_onto_scaled_simplex`].
///
/// Sort-and-threshold: with `u` sorted descending, `rho` is the largest index
/// with `u[rho] > (cumsum(u)[rho] - total) / (rho + 1)` and the output is
/// `max(v - theta, 0)`.
pub fn project_in_place(v: &mut [f64], total: f64) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if !total.is_finite() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if total < 0.0 {
        return Err(Error::InfeasibleSimplex(total));
    }
    if total == 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return Ok(());
    }

    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));

    // rho = 1 always qualifies: u[0] > u[0] - total since total > 0.
    let mut cumsum = 0.0;
    let mut theta = sorted[0] - total;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - total) / (i + 1) as f64;
        if u > candidate {
            theta = candidate;
        }
    }

    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
    Ok(())
}

pub mod oracle {
    //! Exhaustive active-set reference for the simplex projection.

    use crate::error::{Error, Result};

    pub const MAX_DIM: usize = 12;

    /// Enumerates every support set `S`, shifts `v` uniformly on `S` so it sums
    /// to `total`, keeps the KKT-feasible candidates (primal `z_S >= 0`, dual
    /// `v_j <= theta` off the support) and returns the closest one.
    pub fn projection_oracle(v: &[f64], total: f64) -> Result<Vec<f64>> {
        let dim = v.len();
        if dim == 0 {
            return Err(Error::Empty);
        }
        if dim > MAX_DIM {
            return Err(Error::OracleDimensionLimit(dim));
        }
        if !total.is_finite() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if total < 0.0 {
            return Err(Error::InfeasibleSimplex(total));
        }
        if total == 0.0 {
            return Ok(vec![0.0; dim]);
        }

        let slack = 1e-12 * (1.0 + total + v.iter().fold(0.0f64, |a, x| a.max(x.abs())));
        let mut best: Option<(f64, Vec<f64>)> = None;
        for support in 1u32..(1u32 << dim) {
            let members = |i: usize| support & (1 << i) != 0;
            let size = support.count_ones() as f64;
            let mass: f64 = (0..dim).filter(|&i| members(i)).map(|i| v[i]).sum();
            let theta = (mass - total) / size;

            let primal = (0..dim).filter(|&i| members(i)).all(|i| v[i] - theta >= -slack);
            let dual = (0..dim).filter(|&i| !members(i)).all(|i| v[i] - theta <= slack);
            if !(primal && dual) {
                continue;
            }

            let z: Vec<f64> = (0..dim)
                .map(|i| if members(i) { (v[i] - theta).max(0.0) } else { 0.0 })
                .collect();
            let dist: f64 = z.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, z));
            }
        }

        // The true projection always satisfies KKT for its own support.
        best.map(|(_, z)| z).ok_or(Error::NonFinite)
    }
}
