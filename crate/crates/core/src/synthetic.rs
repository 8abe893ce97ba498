//! Seeded generators for scalar and graph processes with known dynamics,
//! plus a small traffic-like network used as a pipeline fixture.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, VertexSet};
use crate::series::TimeSeriesMatrix;
use crate::spectral::{ShiftKind, SpectralBasis};

/// Discarded warm-up samples for noisy scalar simulations.
pub const BURN_IN: usize = 500;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

fn ar_step(coefs: &[f64], intercept: f64, past: &[f64]) -> f64 {
    let n = past.len();
    intercept + coefs.iter().enumerate().map(|(i, a)| a * past[n - 1 - i]).sum::<f64>()
}

/// Initial lag values: ones when noiseless (so the transient is visible),
/// otherwise noise draws.
fn initial(m: usize, noise_sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if noise_sd == 0.0 {
        vec![1.0; m.max(1)]
    } else {
        (0..m.max(1)).map(|_| noise_sd * normal(rng)).collect()
    }
}

fn ar_path(coefs: &[f64], intercept: f64, noise_sd: f64, t: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let burn = if noise_sd == 0.0 { 0 } else { BURN_IN };
    let mut y = initial(coefs.len(), noise_sd, rng);
    let lead = y.len();
    while y.len() < lead + burn + t {
        let e = if noise_sd == 0.0 { 0.0 } else { noise_sd * normal(rng) };
        y.push(ar_step(coefs, intercept, &y) + e);
    }
    if burn == 0 {
        y.truncate(t);
        y
    } else {
        y.split_off(lead + burn)
    }
}

/// `t` samples of `y_t = c + Σ a_i y_{t−i} + σ ε_t` with standard normal `ε`.
/// Noisy runs discard [`BURN_IN`] warm-up samples; noiseless runs start from
/// all-ones lags.
pub fn simulate_ar(coefs: &[f64], intercept: f64, noise_sd: f64, t: usize, seed: u64) -> Vec<f64> {
    ar_path(coefs, intercept, noise_sd, t, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Threshold AR driven by a given regime series: sample `t ≥ m` uses the
/// regime `j` with `thresholds[j−1] < z[t] ≤ thresholds[j]`.
/// `regimes[j] = (intercept, coefficients)`, all of equal order.
pub fn simulate_tar(z: &[f64], thresholds: &[f64], regimes: &[(f64, Vec<f64>)], noise_sd: f64, seed: u64) -> Vec<f64> {
    assert_eq!(regimes.len(), thresholds.len() + 1, "one more regime than thresholds");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = regimes[0].1.len();
    let mut y = initial(m, noise_sd, &mut rng);
    y.truncate(z.len());
    while y.len() < z.len() {
        let t = y.len();
        let (c, a) = &regimes[thresholds.partition_point(|&b| b < z[t])];
        let e = if noise_sd == 0.0 { 0.0 } else { noise_sd * normal(&mut rng) };
        y.push(ar_step(a, *c, &y) + e);
    }
    y
}

/// Graph process whose `k`-th graph frequency is an independent AR process
/// with coefficients `coefs[k]` and noise scale `noise_sd[k]`, shifted by
/// `offset` at every vertex.
pub fn spectral_ar_process(
    basis: &SpectralBasis,
    coefs: &[Vec<f64>],
    noise_sd: &[f64],
    offset: f64,
    t: usize,
    seed: u64,
) -> Result<TimeSeriesMatrix> {
    let n = basis.dim();
    if coefs.len() != n || noise_sd.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: coefs.len().min(noise_sd.len()) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths: Vec<Vec<f64>> = (0..n).map(|k| ar_path(&coefs[k], 0.0, noise_sd[k], t, &mut rng)).collect();
    let spectral = DMatrix::from_fn(n, t, |k, s| paths[k][s]);
    let x = basis.igft_columns(&spectral)?.add_scalar(offset);
    TimeSeriesMatrix::new(x)
}

/// Self-exciting regime-switching graph process: each graph frequency
/// follows AR(1) with coefficient `regimes[j][k]`, where regime `j` is
/// chosen by comparing the previous step's vertex sum with `threshold`
/// (two regimes, `≤` selects the first). Vertex values are `offset + U y`.
pub fn regime_switching_process(
    basis: &SpectralBasis,
    threshold: f64,
    regimes: &[Vec<f64>],
    noise_sd: &[f64],
    offset: f64,
    t: usize,
    seed: u64,
) -> Result<TimeSeriesMatrix> {
    let n = basis.dim();
    if regimes.len() != 2 || regimes.iter().any(|r| r.len() != n) || noise_sd.len() != n {
        return Err(Error::InvalidParameter("need two regimes with one coefficient per frequency".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = basis.eigenvectors();
    let mut y = DVector::from_iterator(n, noise_sd.iter().map(|&s| if s == 0.0 { 1.0 } else { s * normal(&mut rng) }));
    let mut out = DMatrix::zeros(n, t);
    for s in 0..t {
        if s > 0 {
            let z: f64 = out.column(s - 1).sum();
            let coefs = &regimes[usize::from(z > threshold)];
            y = DVector::from_iterator(
                n,
                (0..n).map(|k| coefs[k] * y[k] + if noise_sd[k] == 0.0 { 0.0 } else { noise_sd[k] * normal(&mut rng) }),
            );
        }
        out.set_column(s, &(u * &y).add_scalar(offset));
    }
    TimeSeriesMatrix::new(out)
}

pub struct TrafficFixture {
    pub graph: Graph,
    pub series: TimeSeriesMatrix,
}

/// Daily congestion peak: vertices within two hops of `center` slow down,
/// later and less the farther they are.
struct Hotspot {
    center: usize,
    peak_phase: usize,
}

/// Undirected `rows × cols` grid labelled `r{i}c{j}` carrying a TTI-like
/// series: free flow at 1.0, two recurring congestion hotspots that spread
/// outward over a few steps, day-to-day amplitude jitter, and graph
/// stationary background noise.
pub fn traffic_fixture(rows: usize, cols: usize, days: usize, period: usize, seed: u64) -> Result<TrafficFixture> {
    if rows < 3 || cols < 3 || days == 0 || period < 12 {
        return Err(Error::InvalidParameter("traffic fixture needs a grid of at least 3x3 and period 12".into()));
    }
    let id = |i: usize, j: usize| i * cols + j;
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if j + 1 < cols {
                edges.push((id(i, j), id(i, j + 1), 1.0));
            }
            if i + 1 < rows {
                edges.push((id(i, j), id(i + 1, j), 1.0));
            }
        }
    }
    let labels = (0..rows).flat_map(|i| (0..cols).map(move |j| format!("r{i}c{j}"))).collect();
    let graph = GraphBuilder::new().labels(labels).build(rows * cols, &edges, false)?;
    let n = graph.order();

    let hotspots = [
        Hotspot { center: id(1, 1), peak_phase: period / 3 },
        Hotspot { center: id(rows - 2, cols - 2), peak_phase: 2 * period / 3 },
    ];
    let width = (period / 8).max(2) as f64;
    let t = days * period;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter: Vec<Vec<f64>> = (0..days).map(|_| hotspots.iter().map(|_| 1.0 + 0.1 * normal(&mut rng)).collect()).collect();

    let mut congestion = DMatrix::zeros(n, t);
    for (h, spot) in hotspots.iter().enumerate() {
        let hops = graph.hop_distances_from(&VertexSet::new(vec![spot.center])?);
        for v in 0..n {
            if hops[v] > 2 {
                continue;
            }
            let amplitude = 1.3 - 0.2 * hops[v] as f64;
            let peak = (spot.peak_phase + hops[v]) as f64;
            for s in 0..t {
                let dist = ((s % period) as f64 - peak).abs();
                if dist < width {
                    congestion[(v, s)] += jitter[s / period][h] * amplitude * (1.0 - dist / width);
                }
            }
        }
    }

    let basis = SpectralBasis::from_shift(&graph.directed_laplacian(), ShiftKind::DirectedLaplacian)?;
    let coefs = vec![vec![0.7]; n];
    let noise_sd = vec![0.03; n];
    let background = spectral_ar_process(&basis, &coefs, &noise_sd, 1.0, t, seed.wrapping_add(1))?;
    let series = TimeSeriesMatrix::new(background.values() + congestion)?;
    Ok(TrafficFixture { graph, series })
}
