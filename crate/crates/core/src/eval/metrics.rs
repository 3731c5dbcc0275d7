use crate::error::{Error, Result};

fn check(truth: &[f64], estimate: &[f64]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::Empty);
    }
    if truth.len() != estimate.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} truth values vs {} estimates",
            truth.len(),
            estimate.len()
        )));
    }
    Ok(())
}

fn error_norm(truth: &[f64], estimate: &[f64]) -> f64 {
    truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (t - e) * (t - e))
        .sum::<f64>()
        .sqrt()
}

/// `||truth - estimate|| / sqrt(n)`.
pub fn rmse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    check(truth, estimate)?;
    Ok(error_norm(truth, estimate) / (truth.len() as f64).sqrt())
}

/// `||truth - estimate|| / ||truth||`.
pub fn relative_rmse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    check(truth, estimate)?;
    let norm = truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidConfig("relative RMSE of an all-zero truth".into()));
    }
    Ok(error_norm(truth, estimate) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0], &[2.0, 2.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(relative_rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((relative_rmse(&[1.0, 2.0], &[2.0, 2.0]).unwrap() - 0.2f64.sqrt()).abs() < 1e-15);
        assert_eq!(relative_rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(relative_rmse(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }
}
