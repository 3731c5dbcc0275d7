//! JSON model documents.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{FactorModel, FitResult};

/// `{"m", "n", "f", "w", "h", "budgets", "project_ids", "objective_trace",
/// "converged"}` with `w` and `h` flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub m: usize,
    pub n: usize,
    pub f: usize,
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    pub budgets: Vec<f64>,
    pub project_ids: Vec<String>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl ModelDocument {
    pub fn from_fit(fit: &FitResult, budgets: &[f64], project_ids: &[String]) -> Self {
        let (m, f) = fit.model.w.dim();
        Self {
            m,
            n: fit.model.h.nrows(),
            f,
            w: fit.model.w.iter().copied().collect(),
            h: fit.model.h.iter().copied().collect(),
            budgets: budgets.to_vec(),
            project_ids: project_ids.to_vec(),
            objective_trace: fit.objective_trace.clone(),
            converged: fit.converged,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates a document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.m == 0 || self.n == 0 || self.f == 0 {
            return bad("dimensions must be positive".into());
        }
        let expected_w = self.m.checked_mul(self.f);
        let expected_h = self.n.checked_mul(self.f);
        if expected_w != Some(self.w.len()) {
            return bad(format!(
                "w has {} entries, expected {} x {}",
                self.w.len(),
                self.m,
                self.f
            ));
        }
        if expected_h != Some(self.h.len()) {
            return bad(format!(
                "h has {} entries, expected {} x {}",
                self.h.len(),
                self.n,
                self.f
            ));
        }
        if self.budgets.len() != self.n || self.project_ids.len() != self.n {
            return bad("budgets and project_ids must have n entries".into());
        }
        if self.budgets.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return bad("budgets must be positive".into());
        }
        if self.w.iter().chain(&self.h).any(|v| !v.is_finite() || *v < 0.0) {
            return bad("factors must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn factor_model(&self) -> Result<FactorModel> {
        self.validate()?;
        let w =
            Array2::from_shape_vec((self.m, self.f), self.w.clone()).map_err(|e| Error::InvalidModel(e.to_string()))?;
        let h =
            Array2::from_shape_vec((self.n, self.f), self.h.clone()).map_err(|e| Error::InvalidModel(e.to_string()))?;
        Ok(FactorModel { w, h })
    }
}
