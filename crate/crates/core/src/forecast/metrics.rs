use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeriesMatrix;

/// Truth values smaller than this in magnitude are left out of MAPE.
pub const MAPE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
    pub count: usize,
    pub mape_count: usize,
}

/// Running error sums, so metrics can be pooled over clusters and
/// forecast origins before averaging.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    abs_sum: f64,
    sq_sum: f64,
    ape_sum: f64,
    count: usize,
    mape_count: usize,
}

impl MetricsAccumulator {
    /// Adds every entry. `mape_mask` marks entries (true) to leave out of MAPE only.
    pub fn add(&mut self, pred: &DMatrix<f64>, truth: &DMatrix<f64>, mape_mask: Option<&DMatrix<bool>>) -> Result<()> {
        if pred.shape() != truth.shape() {
            return Err(Error::DimensionMismatch { expected: truth.len(), found: pred.len() });
        }
        if let Some(mask) = mape_mask {
            if mask.shape() != truth.shape() {
                return Err(Error::DimensionMismatch { expected: truth.len(), found: mask.len() });
            }
        }
        for (idx, (&p, &y)) in pred.iter().zip(truth.iter()).enumerate() {
            let e = p - y;
            self.abs_sum += e.abs();
            self.sq_sum += e * e;
            self.count += 1;
            let masked = mape_mask.is_some_and(|m| m[idx]);
            if !masked && y.abs() >= MAPE_EPSILON {
                self.ape_sum += (e / y).abs();
                self.mape_count += 1;
            }
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<ForecastMetrics> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("no forecast entries to score".into()));
        }
        if self.mape_count == 0 {
            return Err(Error::InvalidParameter("every entry is excluded from MAPE".into()));
        }
        let n = self.count as f64;
        Ok(ForecastMetrics {
            mae: self.abs_sum / n,
            rmse: (self.sq_sum / n).sqrt(),
            mape: 100.0 * self.ape_sum / self.mape_count as f64,
            count: self.count,
            mape_count: self.mape_count,
        })
    }
}

pub fn evaluate(pred: &TimeSeriesMatrix, truth: &TimeSeriesMatrix, mape_mask: Option<&DMatrix<bool>>) -> Result<ForecastMetrics> {
    let mut acc = MetricsAccumulator::default();
    acc.add(pred.values(), truth.values(), mape_mask)?;
    acc.finish()
}
