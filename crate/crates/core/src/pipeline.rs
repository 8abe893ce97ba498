//! End-to-end pipeline stages and their on-disk artifacts.
//!
//! Every artifact records the content hash of the graph it was built from;
//! loading it against a different graph is an error. Vertices are stored by
//! label so artifacts stay readable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::active::{extract_active_components, filter_min_size, ActiveComponent};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::forecast::{
    fit_cluster_model, persistence_forecast, predict, ClusterModel, MetricsAccumulator, ModelConfig, ModelKind,
};
use crate::graph::{Graph, VertexSet};
use crate::scsc::{finalize_partition, scsc, ScscConfig};
use crate::series::{write_series, LabelledSeries, SeasonalProfile, TimeSeriesMatrix};
use crate::spectral::SpectralBasis;
use crate::stationarity::lagged_covariances;

/// Graph and series loaded and aligned to the graph's vertex order.
pub struct Inputs {
    pub graph: Graph,
    pub series: TimeSeriesMatrix,
    /// Missing samples filled by moving-average imputation.
    pub imputed: usize,
}

pub fn load_inputs(graph_path: &Path, series_path: &Path, directed: bool) -> Result<Inputs> {
    let graph = Graph::from_csv_path(graph_path, directed)?;
    let raw = LabelledSeries::read_path(series_path)?;
    let series = raw.align_to(&graph)?;
    Ok(Inputs { graph, series, imputed: raw.imputed })
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// `clusters.json` + `gamma_hist` → `clusters.gamma_hist.csv`.
pub fn sidecar_path(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

fn check_hash(expected: &str, g: &Graph, what: &str) -> Result<()> {
    let found = g.content_hash();
    if expected != found {
        return Err(Error::ArtifactMismatch(format!("{what} was built for graph {expected}, not {found}")));
    }
    Ok(())
}

fn labels_of(g: &Graph, set: &VertexSet) -> Vec<String> {
    set.iter().map(|&v| g.label(v)).collect()
}

fn resolve(g: &Graph, labels: &[String]) -> Result<VertexSet> {
    let index = g.label_index();
    let ids = labels
        .iter()
        .map(|l| index.get(l).copied().ok_or_else(|| Error::ArtifactMismatch(format!("vertex {l:?} is not in the graph"))))
        .collect::<Result<Vec<_>>>()?;
    VertexSet::new(ids)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcRecord {
    pub vertices: Vec<String>,
    pub birth: usize,
    pub death: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcArtifact {
    pub graph_hash: String,
    pub alpha: f64,
    pub min_ac_size: usize,
    pub extracted: usize,
    /// Components dropped for having fewer than `min_ac_size` vertices.
    pub filtered: usize,
    pub components: Vec<AcRecord>,
}

impl AcArtifact {
    pub fn resolve(&self, g: &Graph) -> Result<Vec<ActiveComponent>> {
        check_hash(&self.graph_hash, g, "active component file")?;
        self.components
            .iter()
            .map(|c| Ok(ActiveComponent { vertices: resolve(g, &c.vertices)?, birth: c.birth, death: c.death }))
            .collect()
    }
}

/// Thresholds the whole series at `alpha`, extracts active components and
/// drops the small ones.
pub fn extract(g: &Graph, x: &TimeSeriesMatrix, cfg: &PipelineConfig) -> Result<AcArtifact> {
    let all = extract_active_components(g, x, cfg.alpha)?;
    let extracted = all.len();
    let kept = filter_min_size(all, cfg.min_ac_size);
    Ok(AcArtifact {
        graph_hash: g.content_hash(),
        alpha: cfg.alpha,
        min_ac_size: cfg.min_ac_size,
        extracted,
        filtered: extracted - kept.len(),
        components: kept
            .iter()
            .map(|c| AcRecord { vertices: labels_of(g, &c.vertices), birth: c.birth, death: c.death })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub cluster_id: usize,
    pub vertices: Vec<String>,
    /// Smallest ratio over the checked lags, on the final vertex set.
    pub gamma: f64,
    pub lags_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub graph_hash: String,
    pub gamma_th: f64,
    pub theta: usize,
    pub max_lag: usize,
    pub input_components: usize,
    pub merges_accepted: usize,
    pub merges_rejected: usize,
    pub clusters: Vec<ClusterRecord>,
    pub unassigned: Vec<String>,
}

impl ClusterArtifact {
    pub fn resolve(&self, g: &Graph) -> Result<Vec<VertexSet>> {
        check_hash(&self.graph_hash, g, "cluster file")?;
        self.clusters.iter().map(|c| resolve(g, &c.vertices)).collect()
    }
}

pub struct ClusterOutput {
    pub artifact: ClusterArtifact,
    /// `bin_start,bin_end,count` over 20 bins of [0, 1].
    pub gamma_histogram: String,
    /// One line per examined pair.
    pub merge_log: String,
}

const HISTOGRAM_BINS: usize = 20;

fn gamma_histogram(gammas: &[f64]) -> String {
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &g in gammas {
        let bin = ((g.clamp(0.0, 1.0) * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    let mut out = String::from("bin_start,bin_end,count\n");
    for (b, c) in counts.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", b as f64 / HISTOGRAM_BINS as f64, (b + 1) as f64 / HISTOGRAM_BINS as f64, c);
    }
    out
}

/// Seasonally adjusted training window, or the raw window when the
/// configured period does not fit twice.
fn adjusted_training(x: &TimeSeriesMatrix, cfg: &PipelineConfig) -> Result<TimeSeriesMatrix> {
    let (train_end, _) = cfg.split_points(x.len());
    let train = x.slice_time(0, train_end)?;
    match cfg.seasonal_period {
        0 => Ok(train),
        p => SeasonalProfile::estimate(&train, p)?.remove(&train),
    }
}

/// Clusters the active components on the training-window covariances and
/// makes the result a partition.
pub fn cluster(g: &Graph, x: &TimeSeriesMatrix, acs: &AcArtifact, cfg: &PipelineConfig) -> Result<ClusterOutput> {
    let components = acs.resolve(g)?;
    if x.vertices() != g.order() {
        return Err(Error::DimensionMismatch { expected: g.order(), found: x.vertices() });
    }
    let mut artifact = ClusterArtifact {
        graph_hash: g.content_hash(),
        gamma_th: cfg.gamma_th,
        theta: cfg.theta,
        max_lag: cfg.max_lag,
        input_components: components.len(),
        merges_accepted: 0,
        merges_rejected: 0,
        clusters: Vec::new(),
        unassigned: (0..g.order()).map(|v| g.label(v)).collect(),
    };
    let mut merge_log = String::from("left,right,distance,gamma,accepted,merged\n");
    if components.is_empty() {
        return Ok(ClusterOutput { artifact, gamma_histogram: gamma_histogram(&[]), merge_log });
    }

    let train = adjusted_training(x, cfg)?;
    let covariances: Vec<_> = lagged_covariances(&train, cfg.max_lag)?
        .into_iter()
        .map(|c| c.with_diagonal_loading(cfg.diagonal_loading))
        .collect();
    let scfg = ScscConfig { gamma_th: cfg.gamma_th, theta: cfg.theta, max_lag: cfg.max_lag, shift: cfg.shift };
    let cs = scsc(g, &covariances, &components, &scfg)?;
    let mut partition = finalize_partition(g, &cs);
    partition.recompute_gammas(g, &covariances, cfg.shift)?;

    for e in &cs.log {
        let gamma = e.lag_gammas.iter().copied().fold(f64::INFINITY, f64::min);
        let merged = e.merged.map_or(String::new(), |m| m.to_string());
        let _ = writeln!(merge_log, "{},{},{},{},{},{}", e.left, e.right, e.distance, gamma, e.accepted, merged);
    }
    artifact.merges_accepted = cs.log.iter().filter(|e| e.accepted).count();
    artifact.merges_rejected = cs.log.len() - artifact.merges_accepted;
    artifact.clusters = partition
        .clusters
        .iter()
        .map(|c| ClusterRecord {
            cluster_id: c.id,
            vertices: labels_of(g, &c.vertices),
            gamma: c.gamma,
            lags_checked: cfg.max_lag + 1,
        })
        .collect();
    artifact.unassigned = partition.unassigned().into_iter().map(|v| g.label(v)).collect();
    let gammas: Vec<f64> = partition.clusters.iter().map(|c| c.gamma).collect();
    Ok(ClusterOutput { artifact, gamma_histogram: gamma_histogram(&gammas), merge_log })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub graph_hash: String,
    pub model: ModelKind,
    pub train_end: usize,
    pub clusters: Vec<ClusterModel>,
    /// Vertices outside every cluster; forecast by persistence.
    pub unassigned: Vec<usize>,
}

fn model_config(cfg: &PipelineConfig, kind: ModelKind, order: usize) -> ModelConfig {
    ModelConfig {
        kind,
        order,
        regimes: cfg.regimes,
        grid: cfg.tar_grid,
        seasonal_period: cfg.seasonal_period,
        difference: cfg.difference,
    }
}

/// The most recent samples before `origin` that a forecast needs.
fn history_before(x: &TimeSeriesMatrix, origin: usize, needed: usize) -> Result<TimeSeriesMatrix> {
    x.slice_time(origin.saturating_sub(needed), origin)
}

/// Adds the `h`-step-ahead forecasts for every origin in `origins` to
/// `acc[h_index]`. Origins whose target falls at or after `end` are skipped
/// for that horizon.
fn score_rolling(
    x: &TimeSeriesMatrix,
    horizons: &[usize],
    origins: std::ops::Range<usize>,
    end: usize,
    needed: usize,
    acc: &mut [MetricsAccumulator],
    forecast: impl Fn(&TimeSeriesMatrix, usize) -> Result<TimeSeriesMatrix>,
) -> Result<()> {
    let max_h = horizons.iter().copied().max().unwrap_or(1);
    for o in origins {
        let reach = max_h.min(end.saturating_sub(o));
        if reach == 0 {
            continue;
        }
        let pred = forecast(&history_before(x, o, needed)?, reach)?;
        for (k, &h) in horizons.iter().enumerate() {
            if h <= reach {
                let truth = x.values().columns(o + h - 1, 1).into_owned();
                acc[k].add(&pred.values().columns(h - 1, 1).into_owned(), &truth, None)?;
            }
        }
    }
    Ok(())
}

fn mean_mape(acc: &[MetricsAccumulator]) -> Option<f64> {
    let scores: Vec<f64> = acc.iter().filter_map(|a| a.finish().ok()).map(|m| m.mape).collect();
    (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Fits one cluster, choosing the AR order in `1..=ar_order` with the lowest
/// mean validation MAPE over the configured horizons (ties go to the lower
/// order). Without a validation window the largest order is used.
fn fit_with_selection(
    cluster_id: usize,
    vertices: &VertexSet,
    g: &Graph,
    x: &TimeSeriesMatrix,
    cfg: &PipelineConfig,
    kind: ModelKind,
) -> Result<ClusterModel> {
    let (train_end, val_end) = cfg.split_points(x.len());
    let sub = g.induced_subgraph(vertices)?;
    let basis = SpectralBasis::from_shift(&cfg.shift.matrix(&sub.graph)?, cfg.shift)?;
    let rows = x.select_rows(vertices.members())?;
    let train = rows.slice_time(0, train_end)?;

    if val_end == train_end {
        return fit_cluster_model(cluster_id, vertices.members(), &train, &basis, &model_config(cfg, kind, cfg.ar_order));
    }
    let mut best: Option<(f64, ClusterModel)> = None;
    let mut last_err = None;
    for order in 1..=cfg.ar_order {
        let model = match fit_cluster_model(cluster_id, vertices.members(), &train, &basis, &model_config(cfg, kind, order)) {
            Ok(m) => m,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let needed = model.max_order() + usize::from(cfg.difference);
        let mut acc = vec![MetricsAccumulator::default(); cfg.horizons.len()];
        score_rolling(&rows, &cfg.horizons, train_end..val_end, val_end, needed, &mut acc, |h, n| predict(&model, h, n))?;
        let score = mean_mape(&acc).unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, model));
        }
    }
    match (best, last_err) {
        (Some((_, m)), _) => Ok(m),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::InvalidParameter("no AR order to try".into())),
    }
}

fn fit_all(g: &Graph, x: &TimeSeriesMatrix, clusters: &[VertexSet], cfg: &PipelineConfig, kind: ModelKind) -> Result<ModelArtifact> {
    if x.vertices() != g.order() {
        return Err(Error::DimensionMismatch { expected: g.order(), found: x.vertices() });
    }
    let models = clusters
        .par_iter()
        .enumerate()
        .map(|(id, set)| fit_with_selection(id, set, g, x, cfg, kind))
        .collect::<Result<Vec<_>>>()?;
    let mut covered = vec![false; g.order()];
    for set in clusters {
        for &v in set.iter() {
            covered[v] = true;
        }
    }
    Ok(ModelArtifact {
        graph_hash: g.content_hash(),
        model: kind,
        train_end: cfg.split_points(x.len()).0,
        clusters: models,
        unassigned: (0..g.order()).filter(|&v| !covered[v]).collect(),
    })
}

/// Fits the configured model kind for every cluster on the training split.
pub fn fit(g: &Graph, x: &TimeSeriesMatrix, clusters: &ClusterArtifact, cfg: &PipelineConfig) -> Result<ModelArtifact> {
    let sets = clusters.resolve(g)?;
    fit_all(g, x, &sets, cfg, cfg.model)
}

fn needed_history(models: &ModelArtifact) -> usize {
    models
        .clusters
        .iter()
        .map(|m| m.max_order() + usize::from(m.preprocessing.differenced))
        .max()
        .unwrap_or(1)
        .max(1)
}

fn forecast_graph(models: &ModelArtifact, history: &TimeSeriesMatrix, horizon: usize) -> Result<TimeSeriesMatrix> {
    let mut out = persistence_forecast(history, horizon)?.into_values();
    for m in &models.clusters {
        let pred = predict(m, &history.select_rows(&m.vertices)?, horizon)?;
        for (r, &v) in m.vertices.iter().enumerate() {
            out.set_row(v, &pred.values().row(r));
        }
    }
    Ok(TimeSeriesMatrix::new(out)?.with_origin(history.origin() + history.len()))
}

/// Forecasts `horizon` steps past the end of `x` for every vertex.
pub fn predict_graph(g: &Graph, x: &TimeSeriesMatrix, models: &ModelArtifact, horizon: usize) -> Result<TimeSeriesMatrix> {
    check_hash(&models.graph_hash, g, "model file")?;
    if x.vertices() != g.order() {
        return Err(Error::DimensionMismatch { expected: g.order(), found: x.vertices() });
    }
    forecast_graph(models, x, horizon)
}

pub fn forecast_csv(g: &Graph, forecast: &TimeSeriesMatrix) -> Result<Vec<u8>> {
    let labels: Vec<String> = (0..g.order()).map(|v| g.label(v)).collect();
    let mut buf = Vec::new();
    write_series(&mut buf, &labels, forecast.values())?;
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub horizon: usize,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedOrders {
    pub model: String,
    /// AR order per cluster, in cluster-file order.
    pub orders: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub graph_hash: String,
    pub train_end: usize,
    pub validation_end: usize,
    pub series_length: usize,
    pub selected_orders: Vec<SelectedOrders>,
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn get(&self, model: &str, horizon: usize) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.model == model && r.horizon == horizon)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,horizon,mae,rmse,mape,count\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.model, r.horizon, r.mae, r.rmse, r.mape, r.count);
        }
        out
    }
}

fn rows_for(name: &str, horizons: &[usize], acc: &[MetricsAccumulator]) -> Result<Vec<MetricsRow>> {
    horizons
        .iter()
        .zip(acc)
        .map(|(&h, a)| {
            let m = a.finish()?;
            Ok(MetricsRow { model: name.to_string(), horizon: h, mae: m.mae, rmse: m.rmse, mape: m.mape, count: m.count })
        })
        .collect()
}

/// Fits JCM-AR and JCM-TAR on the training split (orders chosen on
/// validation), then scores `h`-step-ahead forecasts from every test origin
/// against persistence. Vertices outside the clusters use persistence in
/// every model.
pub fn evaluate_pipeline(g: &Graph, x: &TimeSeriesMatrix, clusters: &ClusterArtifact, cfg: &PipelineConfig) -> Result<MetricsReport> {
    let sets = clusters.resolve(g)?;
    let t = x.len();
    let (train_end, val_end) = cfg.split_points(t);
    if val_end + cfg.horizons.iter().copied().min().unwrap_or(1) > t {
        return Err(Error::InsufficientSamples { needed: val_end + 1, available: t });
    }
    let mut rows = Vec::new();
    let mut selected_orders = Vec::new();
    for kind in [ModelKind::JcmAr, ModelKind::JcmTar] {
        let models = fit_all(g, x, &sets, cfg, kind)?;
        selected_orders.push(SelectedOrders {
            model: kind.name().to_string(),
            orders: models.clusters.iter().map(ClusterModel::max_order).collect(),
        });
        let mut acc = vec![MetricsAccumulator::default(); cfg.horizons.len()];
        score_rolling(x, &cfg.horizons, val_end..t, t, needed_history(&models), &mut acc, |h, n| forecast_graph(&models, h, n))?;
        rows.extend(rows_for(kind.name(), &cfg.horizons, &acc)?);
    }
    let mut acc = vec![MetricsAccumulator::default(); cfg.horizons.len()];
    score_rolling(x, &cfg.horizons, val_end..t, t, 1, &mut acc, persistence_forecast)?;
    rows.extend(rows_for("persistence", &cfg.horizons, &acc)?);
    Ok(MetricsReport { graph_hash: g.content_hash(), train_end, validation_end: val_end, series_length: t, selected_orders, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::traffic_fixture;

    fn fixture_config() -> PipelineConfig {
        PipelineConfig::parse(
            "seasonal_period = 24\ntheta = 3\nmin_ac_size = 3\ngamma_th = 0.5\nar_order = 2\nregimes = 2\ntar_grid = 10\n",
        )
        .unwrap()
    }

    #[test]
    fn histogram_bins() {
        let h = gamma_histogram(&[0.0, 0.04, 0.96, 1.0]);
        let lines: Vec<&str> = h.lines().collect();
        assert_eq!(lines.len(), HISTOGRAM_BINS + 1);
        assert_eq!(lines[1], "0,0.05,2");
        assert_eq!(lines[20], "0.95,1,2");
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar_path(Path::new("out/clusters.json"), "merges"), PathBuf::from("out/clusters.merges.csv"));
    }

    #[test]
    fn stages_chain_on_fixture() {
        let f = traffic_fixture(5, 6, 20, 24, 3).unwrap();
        let cfg = fixture_config();
        let acs = extract(&f.graph, &f.series, &cfg).unwrap();
        assert!(!acs.components.is_empty());
        let out = cluster(&f.graph, &f.series, &acs, &cfg).unwrap();
        let clusters = &out.artifact;
        assert!(!clusters.clusters.is_empty());
        assert!(clusters.clusters.iter().all(|c| c.gamma > 0.0 && c.gamma <= 1.0 + 1e-12));
        let models = fit(&f.graph, &f.series, clusters, &cfg).unwrap();
        assert_eq!(models.clusters.len(), clusters.clusters.len());
        let pred = predict_graph(&f.graph, &f.series, &models, 4).unwrap();
        assert_eq!((pred.vertices(), pred.len(), pred.origin()), (30, 4, 480));
        let report = evaluate_pipeline(&f.graph, &f.series, clusters, &cfg).unwrap();
        assert_eq!(report.rows.len(), 9);
        assert!(report.rows.iter().all(|r| r.rmse >= r.mae && r.mape >= 0.0));
    }

    #[test]
    fn artifacts_reject_other_graphs() {
        let f = traffic_fixture(5, 6, 20, 24, 3).unwrap();
        let other = traffic_fixture(4, 6, 20, 24, 3).unwrap();
        let cfg = fixture_config();
        let acs = extract(&f.graph, &f.series, &cfg).unwrap();
        assert!(matches!(cluster(&other.graph, &other.series, &acs, &cfg), Err(Error::ArtifactMismatch(_))));
    }

    #[test]
    fn all_inactive_input_gives_no_components() {
        let f = traffic_fixture(4, 4, 4, 24, 1).unwrap();
        let quiet = TimeSeriesMatrix::new(nalgebra::DMatrix::from_element(16, 96, 1.0)).unwrap();
        let acs = extract(&f.graph, &quiet, &fixture_config()).unwrap();
        assert_eq!((acs.extracted, acs.components.len()), (0, 0));
        let out = cluster(&f.graph, &quiet, &acs, &fixture_config()).unwrap();
        assert!(out.artifact.clusters.is_empty());
        assert_eq!(out.artifact.unassigned.len(), 16);
    }
}
