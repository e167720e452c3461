use serde::Serialize;

use crate::error::{Result, SdeError};

/// Least-squares line `log2(err) = order * log2(dt) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    pub order: f64,
    pub intercept: f64,
}

/// Fits the slope of `log2 err` against `log2 dt` over all points.
pub fn fit_order(dt: &[f64], err: &[f64]) -> Result<OrderFit> {
    if dt.len() != err.len() {
        return Err(SdeError::DimensionMismatch {
            expected: dt.len(),
            got: err.len(),
        });
    }
    if dt.len() < 2 {
        return Err(SdeError::InvalidConfig(format!(
            "order fit needs at least two points, got {}",
            dt.len()
        )));
    }
    if let Some(k) = (0..dt.len()).find(|&k| !(dt[k] > 0.0 && err[k] > 0.0 && err[k].is_finite())) {
        return Err(SdeError::InvalidConfig(format!(
            "order fit needs positive finite values, got dt = {}, error = {}",
            dt[k], err[k]
        )));
    }
    let x: Vec<f64> = dt.iter().map(|v| v.log2()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.log2()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(SdeError::InvalidConfig(
            "order fit needs at least two distinct step sizes".into(),
        ));
    }
    let order = sxy / sxx;
    Ok(OrderFit {
        order,
        intercept: my - order * mx,
    })
}

/// Pairwise (tree) sum in index order. The association pattern depends only
/// on the length, so the result is independent of how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Root mean square of `errors` (already squared) with the delta-method
/// standard error `se(mean sq) / (2 rmse)`.
pub fn rmse_with_stderr(squared: &[f64]) -> (f64, f64) {
    let m = squared.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mse = pairwise_sum(squared) / m as f64;
    let rmse = mse.sqrt();
    if m < 2 || rmse == 0.0 {
        return (rmse, 0.0);
    }
    let dev: Vec<f64> = squared.iter().map(|s| (s - mse) * (s - mse)).collect();
    let var = pairwise_sum(&dev) / (m - 1) as f64;
    let se_mse = (var / m as f64).sqrt();
    (rmse, se_mse / (2.0 * rmse))
}

/// Mean and its standard error.
pub fn mean_with_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / m as f64;
    if m < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|s| (s - mean) * (s - mean)).collect();
    (mean, (pairwise_sum(&dev) / ((m - 1) * m) as f64).sqrt())
}
