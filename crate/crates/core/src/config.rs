//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and `#` comments are ignored; unknown keys and repeated keys
//! are errors.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `alpha` | 1.7 | activity threshold on the series values |
//! | `gamma_th` | 0.9 | minimum stationarity ratio for a merge, in (0, 1] |
//! | `theta` | 150 | target number of clusters |
//! | `min_ac_size` | 5 | active components with fewer vertices are dropped |
//! | `max_lag` | 0 | highest covariance lag checked when merging |
//! | `seasonal_period` | 720 | samples per season (0 disables seasonal adjustment) |
//! | `difference` | false | first-difference the adjusted series before modeling |
//! | `model` | jcm-ar | `jcm-ar` or `jcm-tar` for `fit`/`predict` |
//! | `ar_order` | 5 | largest AR order tried on the validation split |
//! | `regimes` | 3 | TAR regime count |
//! | `tar_grid` | 20 | quantile grid points per TAR threshold |
//! | `split` | 0.7,0.1,0.2 | chronological train/validation/test fractions |
//! | `horizons` | 5,7,10 | forecast horizons in steps |
//! | `shift` | laplacian | `laplacian` or `adjacency` |
//! | `directed` | false | read the graph file as directed |
//! | `diagonal_loading` | 0 | added to covariance diagonals before clustering |
//! | `seed` | 0 | seed for every random draw |

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::active::DEFAULT_ALPHA;
use crate::error::{Error, Result};
use crate::forecast::{ModelKind, DEFAULT_AR_ORDER, DEFAULT_REGIMES, DEFAULT_TAR_GRID};
use crate::scsc::{DEFAULT_GAMMA_TH, DEFAULT_THETA};
use crate::spectral::ShiftKind;

/// One day at two-minute sampling.
pub const DEFAULT_SEASONAL_PERIOD: usize = 720;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub gamma_th: f64,
    pub theta: usize,
    pub min_ac_size: usize,
    pub max_lag: usize,
    pub seasonal_period: usize,
    pub difference: bool,
    pub model: ModelKind,
    pub ar_order: usize,
    pub regimes: usize,
    pub tar_grid: usize,
    pub split: [f64; 3],
    pub horizons: Vec<usize>,
    pub shift: ShiftKind,
    pub directed: bool,
    pub diagonal_loading: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            gamma_th: DEFAULT_GAMMA_TH,
            theta: DEFAULT_THETA,
            min_ac_size: 5,
            max_lag: 0,
            seasonal_period: DEFAULT_SEASONAL_PERIOD,
            difference: false,
            model: ModelKind::JcmAr,
            ar_order: DEFAULT_AR_ORDER,
            regimes: DEFAULT_REGIMES,
            tar_grid: DEFAULT_TAR_GRID,
            split: [0.7, 0.1, 0.2],
            horizons: vec![5, 7, 10],
            shift: ShiftKind::DirectedLaplacian,
            directed: false,
            diagonal_loading: 0.0,
            seed: 0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn shift_name(shift: ShiftKind) -> &'static str {
    match shift {
        ShiftKind::Adjacency => "adjacency",
        _ => "laplacian",
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse(format!("line {}: `{key}` set twice", lineno + 1)));
            }
            match key {
                "alpha" => cfg.alpha = parse_value(key, value)?,
                "gamma_th" => cfg.gamma_th = parse_value(key, value)?,
                "theta" => cfg.theta = parse_value(key, value)?,
                "min_ac_size" => cfg.min_ac_size = parse_value(key, value)?,
                "max_lag" => cfg.max_lag = parse_value(key, value)?,
                "seasonal_period" => cfg.seasonal_period = parse_value(key, value)?,
                "difference" => cfg.difference = parse_value(key, value)?,
                "model" => cfg.model = value.parse()?,
                "ar_order" => cfg.ar_order = parse_value(key, value)?,
                "regimes" => cfg.regimes = parse_value(key, value)?,
                "tar_grid" => cfg.tar_grid = parse_value(key, value)?,
                "split" => {
                    let parts: Vec<f64> = parse_list(key, value)?;
                    cfg.split = parts
                        .try_into()
                        .map_err(|_| Error::Parse("`split` needs three comma-separated fractions".into()))?;
                }
                "horizons" => cfg.horizons = parse_list(key, value)?,
                "shift" => {
                    cfg.shift = match value {
                        "laplacian" => ShiftKind::DirectedLaplacian,
                        "adjacency" => ShiftKind::Adjacency,
                        other => return Err(Error::Parse(format!("unknown shift `{other}` (expected laplacian or adjacency)"))),
                    }
                }
                "directed" => cfg.directed = parse_value(key, value)?,
                "diagonal_loading" => cfg.diagonal_loading = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.alpha.is_finite() {
            return bad("alpha must be finite".into());
        }
        if !(self.gamma_th > 0.0 && self.gamma_th <= 1.0) {
            return bad(format!("gamma_th {} outside (0, 1]", self.gamma_th));
        }
        if self.theta == 0 {
            return bad("theta must be at least 1".into());
        }
        if self.min_ac_size == 0 {
            return bad("min_ac_size must be at least 1".into());
        }
        if self.ar_order == 0 || self.regimes == 0 || self.tar_grid == 0 {
            return bad("ar_order, regimes and tar_grid must be at least 1".into());
        }
        if self.split.iter().any(|f| !(*f >= 0.0 && f.is_finite())) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {:?} must be nonnegative and sum to 1", self.split));
        }
        if self.split[0] == 0.0 || self.split[2] == 0.0 {
            return bad("train and test fractions must be positive".into());
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return bad("horizons must be a nonempty list of positive step counts".into());
        }
        if !(self.diagonal_loading >= 0.0 && self.diagonal_loading.is_finite()) {
            return bad("diagonal_loading must be nonnegative".into());
        }
        if self.directed && self.shift == ShiftKind::Adjacency {
            return bad("the adjacency shift is not symmetric on directed graphs; use shift = laplacian".into());
        }
        Ok(())
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(1)
    }

    /// `(train_end, validation_end)` column indices for a series of length `t`.
    pub fn split_points(&self, t: usize) -> (usize, usize) {
        // The nudge keeps e.g. (0.7 + 0.1) * 100 from flooring to 79.
        let train = (self.split[0] * t as f64 + 1e-9).floor() as usize;
        let val = ((self.split[0] + self.split[1]) * t as f64 + 1e-9).floor() as usize;
        (train.min(t), val.clamp(train, t))
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "gamma_th = {}", self.gamma_th);
        let _ = writeln!(s, "theta = {}", self.theta);
        let _ = writeln!(s, "min_ac_size = {}", self.min_ac_size);
        let _ = writeln!(s, "max_lag = {}", self.max_lag);
        let _ = writeln!(s, "seasonal_period = {}", self.seasonal_period);
        let _ = writeln!(s, "difference = {}", self.difference);
        let _ = writeln!(s, "model = {}", self.model.name());
        let _ = writeln!(s, "ar_order = {}", self.ar_order);
        let _ = writeln!(s, "regimes = {}", self.regimes);
        let _ = writeln!(s, "tar_grid = {}", self.tar_grid);
        let _ = writeln!(s, "split = {},{},{}", self.split[0], self.split[1], self.split[2]);
        let _ = writeln!(s, "horizons = {}", list(&self.horizons));
        let _ = writeln!(s, "shift = {}", shift_name(self.shift));
        let _ = writeln!(s, "directed = {}", self.directed);
        let _ = writeln!(s, "diagonal_loading = {}", self.diagonal_loading);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}
