//! Multivariate time series over graph vertices and the preprocessing
//! transforms applied before stationarity analysis.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// `N × T` samples (rows are vertices, columns time steps).
///
/// `origin` is the absolute time index of the first column, so slices keep
/// track of where they sit in the original recording (seasonal phase).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    values: DMatrix<f64>,
    sample_period: f64,
    origin: usize,
}

impl TimeSeriesMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values, sample_period: 1.0, origin: 0 })
    }

    pub fn with_sample_period(mut self, period: f64) -> Self {
        self.sample_period = period;
        self
    }

    pub fn with_origin(mut self, origin: usize) -> Self {
        self.origin = origin;
        self
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != t) {
            return Err(Error::DimensionMismatch { expected: t, found: r.len() });
        }
        Self::new(DMatrix::from_fn(n, t, |i, j| rows[i][j]))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn vertices(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Columns `start..end`, origin shifted accordingly.
    pub fn slice_time(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(Error::InvalidParameter(format!("time range {start}..{end} outside 0..{}", self.len())));
        }
        Ok(Self {
            values: self.values.columns(start, end - start).into_owned(),
            sample_period: self.sample_period,
            origin: self.origin + start,
        })
    }

    /// Rows for `vertices`, in the given order.
    pub fn select_rows(&self, vertices: &[usize]) -> Result<Self> {
        if let Some(&v) = vertices.iter().find(|&&v| v >= self.vertices()) {
            return Err(Error::VertexOutOfRange { vertex: v, n: self.vertices() });
        }
        Ok(Self {
            values: self.values.select_rows(vertices.iter()),
            sample_period: self.sample_period,
            origin: self.origin,
        })
    }

    /// Per-step column sums (e.g. total cluster congestion).
    pub fn column_sums(&self) -> Vec<f64> {
        self.values.column_iter().map(|c| c.sum()).collect()
    }
}

/// Per-vertex, per-phase means over one season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalProfile {
    pub period: usize,
    /// `means[i][phase]` for vertex `i`; phase is `absolute time mod period`.
    pub means: Vec<Vec<f64>>,
}

impl SeasonalProfile {
    pub fn estimate(x: &TimeSeriesMatrix, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidParameter("seasonal period must be positive".into()));
        }
        if x.len() < 2 * period {
            return Err(Error::InsufficientSamples { needed: 2 * period, available: x.len() });
        }
        let n = x.vertices();
        let mut sums = vec![vec![0.0; period]; n];
        let mut counts = vec![0usize; period];
        for t in 0..x.len() {
            let phase = (x.origin + t) % period;
            counts[phase] += 1;
            for (i, row) in sums.iter_mut().enumerate() {
                row[phase] += x.values[(i, t)];
            }
        }
        let means = sums
            .into_iter()
            .map(|row| row.into_iter().zip(&counts).map(|(s, &c)| s / c as f64).collect())
            .collect();
        Ok(Self { period, means })
    }

    pub fn value(&self, vertex: usize, time: usize) -> f64 {
        self.means[vertex][time % self.period]
    }

    pub fn remove(&self, x: &TimeSeriesMatrix) -> Result<TimeSeriesMatrix> {
        self.apply(x, -1.0)
    }

    pub fn restore(&self, x: &TimeSeriesMatrix) -> Result<TimeSeriesMatrix> {
        self.apply(x, 1.0)
    }

    fn apply(&self, x: &TimeSeriesMatrix, sign: f64) -> Result<TimeSeriesMatrix> {
        if x.vertices() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), found: x.vertices() });
        }
        let values = DMatrix::from_fn(x.vertices(), x.len(), |i, t| x.values[(i, t)] + sign * self.value(i, x.origin + t));
        Ok(TimeSeriesMatrix { values, sample_period: x.sample_period, origin: x.origin })
    }

    /// Profile restricted to `vertices`, in the given order.
    pub fn select(&self, vertices: &[usize]) -> Self {
        Self { period: self.period, means: vertices.iter().map(|&v| self.means[v].clone()).collect() }
    }
}

/// Subtracts each vertex's mean at every phase `t mod period`.
pub fn deseasonalize(x: &TimeSeriesMatrix, period: usize) -> Result<TimeSeriesMatrix> {
    SeasonalProfile::estimate(x, period)?.remove(x)
}

/// First difference along time: column `t` is `x[t+1] − x[t]`.
pub fn difference(x: &TimeSeriesMatrix) -> Result<TimeSeriesMatrix> {
    if x.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, available: x.len() });
    }
    let t = x.len();
    let values = x.values.columns(1, t - 1) - x.values.columns(0, t - 1);
    Ok(TimeSeriesMatrix { values, sample_period: x.sample_period, origin: x.origin + 1 })
}

/// Fills NaN entries with the mean of the observed values in a centered
/// window of `width` samples, widening the window until something is
/// observed. A row with no observations at all is an error.
pub fn impute_moving_average(rows: &mut [Vec<f64>], width: usize) -> Result<usize> {
    let half = width.max(1) / 2;
    let mut filled = 0;
    for (r, row) in rows.iter_mut().enumerate() {
        if row.iter().all(|x| x.is_nan()) && !row.is_empty() {
            return Err(Error::Parse(format!("row {r} has no observed values")));
        }
        let source = row.clone();
        for t in 0..row.len() {
            if !source[t].is_nan() {
                continue;
            }
            let mut reach = half.max(1);
            loop {
                let lo = t.saturating_sub(reach);
                let hi = (t + reach + 1).min(source.len());
                let observed: Vec<f64> = source[lo..hi].iter().copied().filter(|x| !x.is_nan()).collect();
                if !observed.is_empty() {
                    row[t] = observed.iter().sum::<f64>() / observed.len() as f64;
                    filled += 1;
                    break;
                }
                reach *= 2;
            }
        }
    }
    Ok(filled)
}

/// Width of the centered window used to impute missing samples.
pub const IMPUTATION_WINDOW: usize = 5;

/// Time series as read from disk: one row per labelled vertex.
#[derive(Debug, Clone)]
pub struct LabelledSeries {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub imputed: usize,
}

impl LabelledSeries {
    /// Parses `label,v0,v1,...` rows. An optional header is recognised by a
    /// non-numeric second field. Empty fields and `NaN` are imputed.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let mut labels = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("series line {} has no samples", line + 1)));
            }
            let parse = |s: &str| -> Option<f64> {
                if s.is_empty() || s.eq_ignore_ascii_case("nan") {
                    Some(f64::NAN)
                } else {
                    s.parse().ok()
                }
            };
            if line == 0 && parse(&rec[1]).is_none() {
                continue;
            }
            let mut row = Vec::with_capacity(rec.len() - 1);
            for field in rec.iter().skip(1) {
                row.push(parse(field).ok_or_else(|| Error::Parse(format!("bad sample {field:?} on line {}", line + 1)))?);
            }
            if row.iter().any(|x| x.is_infinite()) {
                return Err(Error::NonFinite);
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::DimensionMismatch { expected: first.len(), found: row.len() });
                }
            }
            labels.push(rec[0].to_string());
            rows.push(row);
        }
        let imputed = impute_moving_average(&mut rows, IMPUTATION_WINDOW)?;
        Ok(Self { labels, rows, imputed })
    }

    pub fn read_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    /// Reorders rows to the graph's vertex order. Every graph vertex must be
    /// present exactly once and no unknown labels are allowed.
    pub fn align_to(&self, g: &Graph) -> Result<TimeSeriesMatrix> {
        let index = g.label_index();
        let mut slots: Vec<Option<usize>> = vec![None; g.order()];
        for (r, label) in self.labels.iter().enumerate() {
            let v = *index
                .get(label)
                .ok_or_else(|| Error::ArtifactMismatch(format!("series vertex {label:?} is not in the graph")))?;
            if slots[v].replace(r).is_some() {
                return Err(Error::Parse(format!("series vertex {label:?} appears twice")));
            }
        }
        if let Some(v) = slots.iter().position(Option::is_none) {
            return Err(Error::ArtifactMismatch(format!("graph vertex {:?} has no series", g.label(v))));
        }
        let t = self.rows.first().map_or(0, Vec::len);
        TimeSeriesMatrix::new(DMatrix::from_fn(g.order(), t, |i, j| self.rows[slots[i].unwrap()][j]))
    }
}

/// Writes rows as `label,v0,v1,...` with no header, matching [`LabelledSeries::read`].
pub fn write_series<W: Write>(writer: W, labels: &[String], values: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for (i, label) in labels.iter().enumerate() {
        let mut record = vec![label.clone()];
        record.extend(values.row(i).iter().map(|x| x.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
