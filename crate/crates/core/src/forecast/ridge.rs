use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{cholesky_solve, dot};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

/// Closed-form ridge regression. The bias is unpenalized, which is the
/// same as solving on centered data.
pub fn ridge_fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<RidgeModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Argument(format!("ridge needs |X| = |y| > 0, got {} and {}", x.len(), y.len())));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Argument(format!("ridge lambda must be finite and >= 0, got {lambda}")));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Argument("rows have different lengths".into()));
    }
    let n = x.len() as f64;
    let xm: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let ym = y.iter().sum::<f64>() / n;
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    for (row, &yi) in x.iter().zip(y) {
        let c: Vec<f64> = row.iter().zip(&xm).map(|(v, m)| v - m).collect();
        for i in 0..d {
            b[i] += c[i] * (yi - ym);
            for j in i..d {
                a[i * d + j] += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            a[i * d + j] = a[j * d + i];
        }
        a[i * d + i] += lambda;
    }
    let weights = if d == 0 {
        Vec::new()
    } else {
        cholesky_solve(&a, &b).map_err(|_| {
            Error::Numeric(format!(
                "ridge normal equations are singular at lambda = {lambda}; use lambda > 0"
            ))
        })?
    };
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numeric("ridge produced non-finite weights".into()));
    }
    let bias = ym - dot(&weights, &xm);
    Ok(RidgeModel { weights, bias, lambda })
}

impl RidgeModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.bias + dot(&self.weights, x)
    }
}
