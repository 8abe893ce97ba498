use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar autoregression `y_t = c + Σ a_i y_{t−i} + ε_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order: usize,
    /// `a_1..a_m`; `a_1` multiplies the most recent value.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Residual standard deviation of the fit.
    pub noise_scale: f64,
}

impl ArModel {
    pub fn zero(order: usize) -> Self {
        Self { order, coefficients: vec![0.0; order], intercept: 0.0, noise_scale: 0.0 }
    }

    /// One-step prediction with the noise at its zero mean. `history` ends
    /// with the most recent value and must hold at least `order` values.
    pub fn predict_next(&self, history: &[f64]) -> f64 {
        let n = history.len();
        self.intercept + self.coefficients.iter().enumerate().map(|(i, a)| a * history[n - 1 - i]).sum::<f64>()
    }

    /// Residual `y_t − ŷ_t` for every `t ≥ order`.
    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        (self.order..y.len()).map(|t| y[t] - self.predict_next(&y[..t])).collect()
    }
}

/// Design row `[1, y_{t−1}, …, y_{t−m}]`.
pub(crate) fn design_row(y: &[f64], m: usize, t: usize) -> impl Iterator<Item = f64> + '_ {
    std::iter::once(1.0).chain((1..=m).map(move |i| y[t - i]))
}

/// Least-squares fit of `y_t` on `[1, y_{t−1}..y_{t−m}]` over the target
/// indices `rows` (each `≥ m`). When every lag column is constant over the
/// rows the fit falls back to the sample mean; otherwise rank deficiency
/// is resolved by the minimum-norm solution.
pub(crate) fn fit_rows(y: &[f64], m: usize, rows: &[usize]) -> Result<ArModel> {
    if rows.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, available: 0 });
    }
    let k = rows.len();
    let targets = DVector::from_iterator(k, rows.iter().map(|&t| y[t]));

    let lag_constant = (1..=m).all(|i| rows.iter().all(|&t| y[t - i] == y[rows[0] - i]));
    if lag_constant {
        let mean = targets.sum() / k as f64;
        let ssr = targets.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        return Ok(ArModel { order: m, coefficients: vec![0.0; m], intercept: mean, noise_scale: (ssr / k as f64).sqrt() });
    }

    let x = DMatrix::from_row_iterator(k, m + 1, rows.iter().flat_map(|&t| design_row(y, m, t)));
    let svd = x.clone().svd(true, true);
    let eps = svd.singular_values.max() * 1e-12 * (k.max(m + 1) as f64);
    let beta = svd.solve(&targets, eps).map_err(|e| Error::Numerical(e.to_string()))?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numerical("least-squares solution is not finite".into()));
    }
    let ssr = (&targets - &x * &beta).norm_squared();
    Ok(ArModel {
        order: m,
        coefficients: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
        noise_scale: (ssr / k as f64).sqrt(),
    })
}

/// Ordinary least-squares AR(`m`) fit. Needs more than `3m + 2` samples.
pub fn fit_ar(y: &[f64], m: usize) -> Result<ArModel> {
    if m == 0 {
        return Err(Error::InvalidParameter("AR order must be at least 1".into()));
    }
    if y.len() <= 3 * m + 2 {
        return Err(Error::InsufficientSamples { needed: 3 * m + 3, available: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let rows: Vec<usize> = (m..y.len()).collect();
    fit_rows(y, m, &rows)
}
