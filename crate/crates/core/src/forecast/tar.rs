use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ar::{design_row, fit_ar, fit_rows, ArModel};
use crate::error::{Error, Result};

/// Default number of quantile grid points searched for each threshold.
pub const DEFAULT_TAR_GRID: usize = 20;

/// What the regime-selecting variable measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExogenousKind {
    /// Sum of the cluster's raw values one step before the target.
    LaggedClusterSum,
    Custom,
}

/// Threshold autoregression: regime `j` applies when
/// `β_{j−1} < z_t ≤ β_j`, with `β_0 = −∞` and `β_l = +∞` implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TarModel {
    /// The `l − 1` interior thresholds, strictly ascending.
    pub thresholds: Vec<f64>,
    pub regimes: Vec<ArModel>,
    pub exogenous: ExogenousKind,
}

impl TarModel {
    pub fn order(&self) -> usize {
        self.regimes[0].order
    }

    pub fn regime_of(&self, z: f64) -> usize {
        self.thresholds.partition_point(|&b| b < z)
    }

    pub fn predict_next(&self, history: &[f64], z: f64) -> f64 {
        self.regimes[self.regime_of(z)].predict_next(history)
    }
}

/// Empirical quantiles of `z` at `k / (grid + 1)`, `k = 1..=grid`, taken as
/// sample values and deduplicated.
fn quantile_grid(sorted: &[f64], grid: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut out: Vec<f64> = (1..=grid)
        .map(|k| {
            let rank = (k * n).div_ceil(grid + 1);
            sorted[rank.clamp(1, n) - 1]
        })
        .collect();
    out.dedup();
    out
}

/// Running sums of `xxᵀ`, `x·y` and `y²` along rows sorted by `z`.
struct PrefixMoments {
    xx: Vec<DMatrix<f64>>,
    xy: Vec<DVector<f64>>,
    yy: Vec<f64>,
}

impl PrefixMoments {
    fn new(y: &[f64], m: usize, order: &[usize]) -> Self {
        let p = m + 1;
        let mut xx = vec![DMatrix::zeros(p, p)];
        let mut xy = vec![DVector::zeros(p)];
        let mut yy = vec![0.0];
        for &t in order {
            let x = DVector::from_iterator(p, design_row(y, m, t));
            xx.push(xx.last().unwrap() + &x * x.transpose());
            xy.push(xy.last().unwrap() + &x * y[t]);
            yy.push(yy.last().unwrap() + y[t] * y[t]);
        }
        Self { xx, xy, yy }
    }

    /// Residual sum of squares of the least-squares fit on sorted rows `a..b`.
    fn ssr(&self, a: usize, b: usize) -> f64 {
        let xx = &self.xx[b] - &self.xx[a];
        let xy = &self.xy[b] - &self.xy[a];
        let yy = self.yy[b] - self.yy[a];
        let scale = xx.amax().max(1.0);
        let beta = xx
            .clone()
            .svd(true, true)
            .solve(&xy, scale * 1e-12)
            .unwrap_or_else(|_| DVector::zeros(xy.len()));
        (yy - 2.0 * beta.dot(&xy) + (beta.transpose() * &xx * &beta)[(0, 0)]).max(0.0)
    }
}

/// Visits every strictly increasing `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { return };
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Fits an `l`-regime TAR(`m`) model. `z[t]` selects the regime of target
/// `y[t]`; targets run over `t ≥ m`. Thresholds are searched exhaustively over
/// the quantile grid of those `z` values, minimizing the total residual sum
/// of squares subject to every regime holding at least `m + 2` targets.
/// Each chosen threshold is then moved halfway to the next larger sample
/// value, which keeps the training split and leaves a margin on both sides.
pub fn fit_tar(y: &[f64], z: &[f64], l: usize, m: usize, grid: usize) -> Result<TarModel> {
    if y.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), found: z.len() });
    }
    if l == 0 {
        return Err(Error::InvalidParameter("TAR needs at least one regime".into()));
    }
    if l == 1 {
        return Ok(TarModel { thresholds: Vec::new(), regimes: vec![fit_ar(y, m)?], exogenous: ExogenousKind::Custom });
    }
    if m == 0 {
        return Err(Error::InvalidParameter("AR order must be at least 1".into()));
    }
    if grid == 0 {
        return Err(Error::InvalidParameter("threshold grid must have at least one point".into()));
    }
    if y.iter().chain(z.iter().skip(m)).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let min_occupancy = m + 2;
    let available = y.len().saturating_sub(m);
    if available < l * min_occupancy {
        return Err(Error::InsufficientSamples { needed: m + l * min_occupancy, available: y.len() });
    }

    let mut order: Vec<usize> = (m..y.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    let sorted_z: Vec<f64> = order.iter().map(|&t| z[t]).collect();
    let candidates = quantile_grid(&sorted_z, grid);
    let cuts: Vec<usize> = candidates.iter().map(|&b| sorted_z.partition_point(|&v| v <= b)).collect();
    let moments = PrefixMoments::new(y, m, &order);

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut bounds = vec![0; l + 1];
    bounds[l] = order.len();
    for_each_combination(candidates.len(), l - 1, |combo| {
        for (j, &c) in combo.iter().enumerate() {
            bounds[j + 1] = cuts[c];
        }
        if bounds.windows(2).any(|w| w[1] < w[0] + min_occupancy) {
            return;
        }
        let total: f64 = bounds.windows(2).map(|w| moments.ssr(w[0], w[1])).sum();
        if best.as_ref().is_none_or(|(s, _)| total < *s) {
            best = Some((total, combo.to_vec()));
        }
    });
    let Some((_, combo)) = best else {
        return Err(Error::RegimeEmpty { min_occupancy });
    };

    let thresholds: Vec<f64> = combo.iter().map(|&c| 0.5 * (sorted_z[cuts[c] - 1] + sorted_z[cuts[c]])).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); l];
    for t in m..y.len() {
        members[thresholds.partition_point(|&b| b < z[t])].push(t);
    }
    let regimes = members.iter().map(|rows| fit_rows(y, m, rows)).collect::<Result<Vec<_>>>()?;
    Ok(TarModel { thresholds, regimes, exogenous: ExogenousKind::Custom })
}
