//! Log-log slope fitting for scaling-law verification.

use serde::Serialize;

use crate::error::DomainError;

/// Ordinary least squares fit of `log(err) = exponent * log(h) + intercept`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fit a power law `err = C * h^exponent` through at least three
/// strictly positive `(h, err)` pairs.
pub fn fit_scaling(h_values: &[f64], errors: &[f64]) -> Result<SlopeFit, DomainError> {
    if h_values.len() != errors.len() {
        return Err(DomainError("fit_scaling: length mismatch".into()));
    }
    if h_values.len() < 3 {
        return Err(DomainError(format!(
            "fit_scaling: need at least 3 points, got {}",
            h_values.len()
        )));
    }
    if h_values.iter().chain(errors).any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(DomainError(
            "fit_scaling: values must be positive and finite".into(),
        ));
    }

    let xs: Vec<f64> = h_values.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(DomainError(
            "fit_scaling: all h values coincide".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sst: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let pred = slope * x + intercept;
            (y - pred) * (y - pred)
        })
        .sum();
    let r_squared = if sst == 0.0 { 1.0 } else { 1.0 - sse / sst };
    Ok(SlopeFit {
        exponent: slope,
        intercept,
        r_squared,
        points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let h = [0.05, 0.075, 0.1, 0.15, 0.2];
        let quad: Vec<f64> = h.iter().map(|v| 3.7 * v * v).collect();
        let fit = fit_scaling(&h, &quad).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let inv_cubed: Vec<f64> = h.iter().map(|v| 0.2 * v.powi(-3)).collect();
        let fit = fit_scaling(&h, &inv_cubed).unwrap();
        assert!((fit.exponent + 3.0).abs() < 1e-10);
    }

    #[test]
    fn domain_errors() {
        assert!(fit_scaling(&[0.1, 0.2], &[1.0, 2.0]).is_err());
        assert!(fit_scaling(&[0.1, 0.2, 0.3], &[1.0, -2.0, 3.0]).is_err());
        assert!(fit_scaling(&[0.1, 0.1, 0.1], &[1.0, 2.0, 3.0]).is_err());
    }
}
