//! Joint causal forecasting of a cluster: the cluster's signals are moved
//! to the graph frequency domain and each frequency gets its own scalar AR
//! or threshold AR model.

mod ar;
mod metrics;
mod tar;

pub use ar::{fit_ar, ArModel};
pub use metrics::{evaluate, ForecastMetrics, MetricsAccumulator, MAPE_EPSILON};
pub use tar::{fit_tar, ExogenousKind, TarModel, DEFAULT_TAR_GRID};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{difference, SeasonalProfile, TimeSeriesMatrix};
use crate::spectral::SpectralBasis;

pub const DEFAULT_AR_ORDER: usize = 5;
pub const DEFAULT_REGIMES: usize = 3;

/// Travel time index: current over free-flow travel time.
pub fn tti(travel_time: f64, free_flow_time: f64) -> Result<f64> {
    if !(free_flow_time > 0.0 && free_flow_time.is_finite()) {
        return Err(Error::InvalidParameter(format!("free-flow time {free_flow_time} must be positive")));
    }
    if !(travel_time >= 0.0 && travel_time.is_finite()) {
        return Err(Error::InvalidParameter(format!("travel time {travel_time} must be nonnegative")));
    }
    Ok(travel_time / free_flow_time)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "jcm-ar")]
    JcmAr,
    #[serde(rename = "jcm-tar")]
    JcmTar,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::JcmAr => "jcm-ar",
            ModelKind::JcmTar => "jcm-tar",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jcm-ar" => Ok(ModelKind::JcmAr),
            "jcm-tar" => Ok(ModelKind::JcmTar),
            other => Err(Error::Parse(format!("unknown model kind `{other}` (expected jcm-ar or jcm-tar)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub order: usize,
    pub regimes: usize,
    pub grid: usize,
    /// Samples per season; 0 disables seasonal adjustment.
    pub seasonal_period: usize,
    pub difference: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::JcmAr,
            order: DEFAULT_AR_ORDER,
            regimes: DEFAULT_REGIMES,
            grid: DEFAULT_TAR_GRID,
            seasonal_period: 0,
            difference: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrequencyModel {
    Ar(ArModel),
    Tar(TarModel),
}

impl FrequencyModel {
    pub fn order(&self) -> usize {
        match self {
            FrequencyModel::Ar(m) => m.order,
            FrequencyModel::Tar(m) => m.order(),
        }
    }

    pub fn predict_next(&self, history: &[f64], z: f64) -> f64 {
        match self {
            FrequencyModel::Ar(m) => m.predict_next(history),
            FrequencyModel::Tar(m) => m.predict_next(history, z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub seasonal: Option<SeasonalProfile>,
    pub differenced: bool,
}

impl Preprocessing {
    /// Seasonal adjustment, then optional differencing.
    fn apply(&self, raw: &TimeSeriesMatrix) -> Result<(TimeSeriesMatrix, TimeSeriesMatrix)> {
        let adjusted = match &self.seasonal {
            Some(p) => p.remove(raw)?,
            None => raw.clone(),
        };
        let model_scale = if self.differenced { difference(&adjusted)? } else { adjusted.clone() };
        Ok((adjusted, model_scale))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub cluster_id: usize,
    /// Graph vertices of the cluster, in basis row order.
    pub vertices: Vec<usize>,
    pub basis: SpectralBasis,
    /// One model per eigenvector.
    pub models: Vec<FrequencyModel>,
    pub preprocessing: Preprocessing,
}

impl ClusterModel {
    pub fn max_order(&self) -> usize {
        self.models.iter().map(FrequencyModel::order).max().unwrap_or(0)
    }
}

/// Regime variable for each column of the model-scale series: the summed
/// raw values one step earlier. Column 0 has no predecessor when the data
/// are not differenced; it is never a fitting target.
fn lagged_sums(raw: &TimeSeriesMatrix, model_scale: &TimeSeriesMatrix) -> Vec<f64> {
    let sums = raw.column_sums();
    let shift = model_scale.origin() - raw.origin();
    (0..model_scale.len()).map(|t| sums[(t + shift).saturating_sub(1)]).collect()
}

/// Fits a cluster model on raw training data `x` (rows in `vertices`
/// order). Seasonal means are estimated from `x` when configured.
pub fn fit_cluster_model(
    cluster_id: usize,
    vertices: &[usize],
    x: &TimeSeriesMatrix,
    basis: &SpectralBasis,
    cfg: &ModelConfig,
) -> Result<ClusterModel> {
    let n = vertices.len();
    if basis.dim() != n || x.vertices() != n {
        return Err(Error::DimensionMismatch { expected: n, found: if basis.dim() != n { basis.dim() } else { x.vertices() } });
    }
    let seasonal = match cfg.seasonal_period {
        0 => None,
        p => Some(SeasonalProfile::estimate(x, p)?),
    };
    let preprocessing = Preprocessing { seasonal, differenced: cfg.difference };
    let (_, model_scale) = preprocessing.apply(x)?;
    let spectral = basis.gft_columns(model_scale.values())?;
    let z = lagged_sums(x, &model_scale);

    let models = (0..n)
        .into_par_iter()
        .map(|k| {
            let y: Vec<f64> = spectral.row(k).iter().copied().collect();
            match cfg.kind {
                ModelKind::JcmAr => fit_ar(&y, cfg.order).map(FrequencyModel::Ar),
                // A regime variable with too few distinct values (a constant
                // cluster, say) cannot be split; one regime is plain AR.
                ModelKind::JcmTar => match fit_tar(&y, &z, cfg.regimes, cfg.order, cfg.grid) {
                    Ok(mut m) => {
                        m.exogenous = ExogenousKind::LaggedClusterSum;
                        Ok(FrequencyModel::Tar(m))
                    }
                    Err(Error::RegimeEmpty { .. }) => fit_ar(&y, cfg.order).map(FrequencyModel::Ar),
                    Err(e) => Err(e),
                },
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterModel { cluster_id, vertices: vertices.to_vec(), basis: basis.clone(), models, preprocessing })
}

/// Iterated multi-step forecast from raw `history` (rows in the model's
/// vertex order). Each step predicts every frequency with the noise at
/// zero, maps back to the vertex domain, undoes differencing and adds the
/// seasonal mean of the target time. Output columns continue the history's
/// time axis.
pub fn predict(model: &ClusterModel, history: &TimeSeriesMatrix, horizon: usize) -> Result<TimeSeriesMatrix> {
    let n = model.vertices.len();
    if history.vertices() != n {
        return Err(Error::DimensionMismatch { expected: n, found: history.vertices() });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter("forecast horizon must be at least 1".into()));
    }
    let offset = usize::from(model.preprocessing.differenced);
    let needed = model.max_order().max(1) + offset;
    if history.len() < needed {
        return Err(Error::InsufficientSamples { needed, available: history.len() });
    }
    let (adjusted, model_scale) = model.preprocessing.apply(history)?;
    let spectral = model.basis.gft_columns(model_scale.values())?;
    let mut paths: Vec<Vec<f64>> = (0..n).map(|k| spectral.row(k).iter().copied().collect()).collect();

    let start = history.origin() + history.len();
    let u = model.basis.eigenvectors();
    let mut level: DVector<f64> = adjusted.values().column(adjusted.len() - 1).into_owned();
    let mut last_sum: f64 = history.values().column(history.len() - 1).sum();
    let mut out = DMatrix::zeros(n, horizon);
    for h in 0..horizon {
        let next = DVector::from_iterator(n, model.models.iter().zip(&paths).map(|(m, p)| m.predict_next(p, last_sum)));
        for (p, v) in paths.iter_mut().zip(next.iter()) {
            p.push(*v);
        }
        let vertex_domain = u * &next;
        level = if model.preprocessing.differenced { level + vertex_domain } else { vertex_domain };
        for i in 0..n {
            let seasonal = model.preprocessing.seasonal.as_ref().map_or(0.0, |p| p.value(i, start + h));
            out[(i, h)] = level[i] + seasonal;
        }
        last_sum = out.column(h).sum();
    }
    Ok(TimeSeriesMatrix::new(out)?.with_sample_period(history.sample_period()).with_origin(start))
}

/// Repeats the last observation.
pub fn persistence_forecast(history: &TimeSeriesMatrix, horizon: usize) -> Result<TimeSeriesMatrix> {
    if history.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, available: 0 });
    }
    let last = history.values().column(history.len() - 1).into_owned();
    let out = DMatrix::from_fn(history.vertices(), horizon, |i, _| last[i]);
    Ok(TimeSeriesMatrix::new(out)?
        .with_sample_period(history.sample_period())
        .with_origin(history.origin() + history.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::spectral::ShiftKind;
    use crate::synthetic::{regime_switching_process, simulate_ar, spectral_ar_process};

    fn path_basis(n: usize) -> SpectralBasis {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let g = Graph::new(n, &edges, false).unwrap();
        SpectralBasis::from_shift(&g.directed_laplacian(), ShiftKind::DirectedLaplacian).unwrap()
    }

    fn ar_cfg(order: usize) -> ModelConfig {
        ModelConfig { order, ..Default::default() }
    }

    #[test]
    fn tti_examples() {
        assert_eq!(tti(100.0, 100.0).unwrap(), 1.0);
        assert_eq!(tti(200.0, 100.0).unwrap(), 2.0);
        assert!((tti(170.0, 100.0).unwrap() - 1.7).abs() < 1e-15);
        assert!(tti(1.0, 0.0).is_err());
        assert!(tti(1.0, -2.0).is_err());
    }

    #[test]
    fn per_frequency_ar1_recovery() {
        let basis = path_basis(4);
        let coefs = [0.9, 0.5, -0.3, 0.1];
        let x = spectral_ar_process(&basis, &coefs.map(|a| vec![a]), &[1.0; 4], 0.0, 10_000, 17).unwrap();
        let model = fit_cluster_model(0, &[0, 1, 2, 3], &x, &basis, &ar_cfg(1)).unwrap();
        for (m, a) in model.models.iter().zip(coefs) {
            let FrequencyModel::Ar(m) = m else { panic!() };
            assert!((m.coefficients[0] - a).abs() < 0.05, "{} vs {a}", m.coefficients[0]);
        }
    }

    #[test]
    fn zero_signals_give_zero_models_and_forecasts() {
        let basis = path_basis(3);
        let x = TimeSeriesMatrix::new(DMatrix::zeros(3, 40)).unwrap();
        let model = fit_cluster_model(0, &[0, 1, 2], &x, &basis, &ar_cfg(2)).unwrap();
        assert!(model.models.iter().all(|m| *m == FrequencyModel::Ar(ArModel::zero(2))));
        let pred = predict(&model, &x, 4).unwrap();
        assert_eq!(pred.values(), &DMatrix::zeros(3, 4));
        assert_eq!(pred.origin(), 40);
    }

    #[test]
    fn tar_on_constant_cluster_falls_back_to_ar() {
        let basis = path_basis(3);
        let x = TimeSeriesMatrix::new(DMatrix::from_element(3, 60, 2.0)).unwrap();
        let cfg = ModelConfig { kind: ModelKind::JcmTar, order: 2, regimes: 2, ..ModelConfig::default() };
        let model = fit_cluster_model(0, &[0, 1, 2], &x, &basis, &cfg).unwrap();
        assert!(model.models.iter().all(|m| matches!(m, FrequencyModel::Ar(_))));
        let pred = predict(&model, &x, 3).unwrap();
        assert!(pred.values().iter().all(|v| (v - 2.0).abs() < 1e-9));
    }

    #[test]
    fn singleton_cluster_is_plain_ar() {
        let y = simulate_ar(&[0.7, -0.1], 0.2, 0.5, 400, 2);
        let x = TimeSeriesMatrix::from_rows(&[y.clone()]).unwrap();
        let basis = SpectralBasis::from_shift(&DMatrix::zeros(1, 1), ShiftKind::DirectedLaplacian).unwrap();
        let model = fit_cluster_model(0, &[7], &x, &basis, &ar_cfg(2)).unwrap();
        assert_eq!(model.models[0], FrequencyModel::Ar(fit_ar(&y, 2).unwrap()));
    }

    #[test]
    fn deterministic_recursion_forecast() {
        let basis = path_basis(3);
        let ar = ArModel { order: 1, coefficients: vec![0.5], intercept: 0.0, noise_scale: 0.0 };
        let model = ClusterModel {
            cluster_id: 0,
            vertices: vec![0, 1, 2],
            basis: basis.clone(),
            models: vec![FrequencyModel::Ar(ar); 3],
            preprocessing: Preprocessing { seasonal: None, differenced: false },
        };
        let v = DVector::from_vec(vec![4.0, -2.0, 1.0]);
        let history = TimeSeriesMatrix::new(DMatrix::from_columns(&[basis.igft(&v).unwrap()])).unwrap();
        let pred = predict(&model, &history, 3).unwrap();
        for (h, factor) in [0.5, 0.25, 0.125].into_iter().enumerate() {
            let spectral = basis.gft(&pred.values().column(h).into_owned()).unwrap();
            assert!((spectral - &v * factor).amax() < 1e-12);
        }
    }

    #[test]
    fn tar_forecast_uses_regime_of_lagged_sum() {
        let basis = SpectralBasis::identity(2);
        let regime = |c: f64, a: f64| ArModel { order: 1, coefficients: vec![a], intercept: c, noise_scale: 0.0 };
        let tar = TarModel {
            thresholds: vec![1.0, 5.0],
            regimes: vec![regime(0.0, 0.1), regime(1.0, 0.2), regime(2.0, 0.3)],
            exogenous: ExogenousKind::LaggedClusterSum,
        };
        let model = ClusterModel {
            cluster_id: 0,
            vertices: vec![0, 1],
            basis,
            models: vec![FrequencyModel::Tar(tar.clone()), FrequencyModel::Tar(tar)],
            preprocessing: Preprocessing { seasonal: None, differenced: false },
        };
        // Last column sums to 3, inside (1, 5]: regime 2 of 3.
        let history = TimeSeriesMatrix::from_rows(&[vec![9.0, 1.0], vec![9.0, 2.0]]).unwrap();
        let pred = predict(&model, &history, 1).unwrap();
        assert_eq!(pred.values()[(0, 0)], 1.0 + 0.2 * 1.0);
        assert_eq!(pred.values()[(1, 0)], 1.0 + 0.2 * 2.0);
    }

    #[test]
    fn noiseless_fit_then_predict_reproduces_generator() {
        let basis = path_basis(3);
        let x = spectral_ar_process(&basis, &[vec![0.9], vec![0.5, 0.2], vec![-0.6]], &[0.0; 3], 2.0, 200, 0).unwrap();
        let model = fit_cluster_model(0, &[0, 1, 2], &x.slice_time(0, 150).unwrap(), &basis, &ar_cfg(2)).unwrap();
        for origin in [150, 170] {
            let pred = predict(&model, &x.slice_time(0, origin).unwrap(), 10).unwrap();
            let truth = x.slice_time(origin, origin + 10).unwrap();
            assert!((pred.values() - truth.values()).amax() < 1e-8);
        }
    }

    #[test]
    fn noiseless_tar_cluster_reproduces_generator() {
        // The constant frequency flips sign every step without decaying, so the
        // vertex sum keeps alternating across the threshold by a wide margin.
        let basis = path_basis(3);
        let x = regime_switching_process(&basis, 3.0, &[vec![-1.0, 0.95, 0.9], vec![-1.0, -0.95, 0.5]], &[0.0; 3], 1.0, 300, 0)
            .unwrap();
        let cfg = ModelConfig { kind: ModelKind::JcmTar, order: 1, regimes: 2, grid: 248, ..Default::default() };
        let model = fit_cluster_model(0, &[0, 1, 2], &x.slice_time(0, 250).unwrap(), &basis, &cfg).unwrap();
        let pred = predict(&model, &x.slice_time(0, 250).unwrap(), 20).unwrap();
        assert!((pred.values() - x.slice_time(250, 270).unwrap().values()).amax() < 1e-8);
    }

    #[test]
    fn differencing_is_undone() {
        let t = 60;
        let x = TimeSeriesMatrix::new(DMatrix::from_fn(2, t, |i, s| 1.0 + i as f64 + 0.01 * s as f64)).unwrap();
        let cfg = ModelConfig { order: 1, difference: true, ..Default::default() };
        let model = fit_cluster_model(3, &[4, 9], &x, &SpectralBasis::identity(2), &cfg).unwrap();
        let pred = predict(&model, &x, 5).unwrap();
        for h in 0..5 {
            for i in 0..2 {
                let expected = 1.0 + i as f64 + 0.01 * (t + h) as f64;
                assert!((pred.values()[(i, h)] - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn seasonal_means_are_restored_at_target_phase() {
        let period = 6;
        let x = TimeSeriesMatrix::new(DMatrix::from_fn(2, 60, |i, s| 1.0 + (i as f64 + 1.0) * ((s % period) as f64).sin()))
            .unwrap()
            .with_origin(4);
        for difference in [false, true] {
            let cfg = ModelConfig { order: 1, seasonal_period: period, difference, ..Default::default() };
            let model = fit_cluster_model(0, &[0, 1], &x, &SpectralBasis::identity(2), &cfg).unwrap();
            let pred = predict(&model, &x, 8).unwrap();
            assert_eq!(pred.origin(), 64);
            for h in 0..8 {
                for i in 0..2 {
                    let expected = 1.0 + (i as f64 + 1.0) * (((h + 60) % period) as f64).sin();
                    assert!((pred.values()[(i, h)] - expected).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn relabeling_is_equivariant() {
        let edges = [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (1, 3, 0.5)];
        let g = Graph::new(4, &edges, false).unwrap();
        let perm = [2usize, 0, 3, 1];
        let pg = Graph::new(4, &edges.map(|(a, b, w)| (perm[a], perm[b], w)), false).unwrap();
        let basis = SpectralBasis::from_shift(&g.directed_laplacian(), ShiftKind::DirectedLaplacian).unwrap();
        let pbasis = SpectralBasis::from_shift(&pg.directed_laplacian(), ShiftKind::DirectedLaplacian).unwrap();
        let x = spectral_ar_process(&basis, &[vec![0.8], vec![0.4], vec![-0.2], vec![0.6]], &[1.0; 4], 3.0, 300, 4).unwrap();
        let mut inverse = [0; 4];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let px = x.select_rows(&inverse).unwrap();
        for kind in [ModelKind::JcmAr, ModelKind::JcmTar] {
            let cfg = ModelConfig { kind, order: 2, regimes: 2, ..Default::default() };
            let a = predict(&fit_cluster_model(0, &[0, 1, 2, 3], &x, &basis, &cfg).unwrap(), &x, 5).unwrap();
            let b = predict(&fit_cluster_model(0, &[0, 1, 2, 3], &px, &pbasis, &cfg).unwrap(), &px, 5).unwrap();
            for i in 0..4 {
                for h in 0..5 {
                    assert!((a.values()[(i, h)] - b.values()[(perm[i], h)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn persistence_repeats_last_column() {
        let x = TimeSeriesMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = persistence_forecast(&x, 3).unwrap();
        assert_eq!(p.row(0), vec![2.0; 3]);
        assert_eq!(p.row(1), vec![4.0; 3]);
        assert_eq!(p.origin(), 2);
    }

    #[test]
    fn model_json_round_trip() {
        let basis = path_basis(3);
        let x = regime_switching_process(&basis, 3.0, &[vec![0.5; 3], vec![-0.5; 3]], &[0.3; 3], 1.0, 200, 1).unwrap();
        let cfg = ModelConfig { kind: ModelKind::JcmTar, order: 1, regimes: 2, ..Default::default() };
        let model = fit_cluster_model(5, &[1, 4, 6], &x, &basis, &cfg).unwrap();
        let back: ClusterModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn insufficient_history() {
        let basis = path_basis(2);
        let x = spectral_ar_process(&basis, &[vec![0.5, 0.1], vec![0.2, 0.1]], &[1.0; 2], 0.0, 100, 1).unwrap();
        let model = fit_cluster_model(0, &[0, 1], &x, &basis, &ar_cfg(2)).unwrap();
        assert!(matches!(predict(&model, &x.slice_time(0, 1).unwrap(), 1), Err(Error::InsufficientSamples { .. })));
        assert!(predict(&model, &x, 0).is_err());
    }
}
