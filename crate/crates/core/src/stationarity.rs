//! Covariance estimation, the stationarity ratio, joint-diagonalizability and
//! superstationarity tests, and synthetic graph-stationary processes.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::adjacency_strongly_connected;
use crate::series::TimeSeriesMatrix;
use crate::spectral::SpectralBasis;

/// Lag-`l` cross covariance between `x⁽ᵗ⁾` and `x⁽ᵗ⁻ˡ⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: DMatrix<f64>,
    pub lag: usize,
    /// Number of samples behind the estimate; 0 for analytic constructions.
    pub samples: usize,
}

impl CovarianceEstimate {
    pub fn analytic(matrix: DMatrix<f64>) -> Self {
        Self { matrix, lag: 0, samples: 0 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Principal submatrix on `indices`.
    pub fn slice(&self, indices: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select_rows(indices.iter()).select_columns(indices.iter()),
            lag: self.lag,
            samples: self.samples,
        }
    }

    /// Adds `epsilon · I`.
    pub fn with_diagonal_loading(mut self, epsilon: f64) -> Self {
        for i in 0..self.dim() {
            self.matrix[(i, i)] += epsilon;
        }
        self
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for i in 0..self.dim() {
            w.write_record(self.matrix.row(i).iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Unbiased lag-`lag` cross covariance with per-vertex mean removal:
/// `C[i,j] = Σ_t (x_i(t) − μ_i)(x_j(t − lag) − μ_j) / (T − lag − 1)`.
/// The lag-0 estimate is symmetrized.
pub fn sample_covariance(x: &TimeSeriesMatrix, lag: usize) -> Result<CovarianceEstimate> {
    let t = x.len();
    if t <= lag + 1 {
        return Err(Error::InsufficientSamples { needed: lag + 2, available: t });
    }
    let values = x.values();
    let means: Vec<f64> = values.row_iter().map(|r| r.sum() / t as f64).collect();
    let centered = DMatrix::from_fn(values.nrows(), t, |i, j| values[(i, j)] - means[i]);
    let lead = centered.columns(lag, t - lag);
    let trail = centered.columns(0, t - lag);
    let mut matrix = lead * trail.transpose() / (t - lag - 1) as f64;
    if lag == 0 {
        matrix = (&matrix + matrix.transpose()) * 0.5;
    }
    Ok(CovarianceEstimate { matrix, lag, samples: t })
}

/// Lags `0..=max_lag`.
pub fn lagged_covariances(x: &TimeSeriesMatrix, max_lag: usize) -> Result<Vec<CovarianceEstimate>> {
    (0..=max_lag).map(|l| sample_covariance(x, l)).collect()
}

/// `P = Uᵀ C U`.
pub fn spectral_projection(basis: &SpectralBasis, c: &CovarianceEstimate) -> Result<DMatrix<f64>> {
    if c.dim() != basis.dim() || !c.matrix.is_square() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: c.dim() });
    }
    let u = basis.eigenvectors();
    Ok(u.tr_mul(&c.matrix) * u)
}

/// Diagonality of `P = Uᵀ C U`: `‖diag P‖₂ / ‖P‖_F`.
pub fn stationarity_ratio(basis: &SpectralBasis, c: &CovarianceEstimate) -> Result<f64> {
    let p = spectral_projection(basis, c)?;
    let total = p.norm();
    if total == 0.0 {
        return Err(Error::ZeroCovariance);
    }
    Ok(p.diagonal().norm() / total)
}

/// Normalized commutator `‖SC − CS‖_F / (‖S‖_F ‖C‖_F)`. Zero exactly when the
/// two symmetric matrices are jointly diagonalizable; needs no eigenbasis.
pub fn commutator_gap(shift: &DMatrix<f64>, c: &CovarianceEstimate) -> Result<f64> {
    if shift.nrows() != c.dim() || !shift.is_square() {
        return Err(Error::DimensionMismatch { expected: shift.nrows(), found: c.dim() });
    }
    for m in [shift, &c.matrix] {
        let asym = (m - m.transpose()).abs().max();
        if asym > crate::spectral::SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
    }
    let norms = shift.norm() * c.matrix.norm();
    if norms == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((shift * &c.matrix - &c.matrix * shift).norm() / norms)
}

/// `C = U diag(spectrum) Uᵀ`, graph-stationary by construction.
pub fn covariance_from_spectrum(basis: &SpectralBasis, spectrum: &[f64]) -> Result<CovarianceEstimate> {
    if spectrum.len() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: spectrum.len() });
    }
    if let Some(&bad) = spectrum.iter().find(|&&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("spectrum entry {bad} is not positive")));
    }
    Ok(CovarianceEstimate::analytic(basis.synthesize(&DVector::from_column_slice(spectrum))))
}

/// Quadratic power spectrum `2.146e-3 · i² + 1.073e-5`, `i = 1..=n`.
pub fn quadratic_spectrum(n: usize) -> Vec<f64> {
    (1..=n).map(|i| 2.146e-3 * (i * i) as f64 + 1.073e-5).collect()
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.min()
}

/// `C = a·A + b·I`, which stays graph-stationary on every induced subgraph.
pub fn superstationary_covariance(adjacency: &DMatrix<f64>, a: f64, b: f64) -> Result<CovarianceEstimate> {
    if !adjacency.is_square() {
        return Err(Error::DimensionMismatch { expected: adjacency.nrows(), found: adjacency.ncols() });
    }
    let n = adjacency.nrows();
    let c = adjacency * a + DMatrix::identity(n, n) * b;
    let lowest = min_eigenvalue(&c);
    if lowest < -1e-10 {
        return Err(Error::NotPsd(lowest));
    }
    Ok(CovarianceEstimate::analytic(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMethod {
    /// Least-squares fit against `a·A + b·I`; exact on strongly connected graphs.
    LinearFit,
    /// Exhaustive principal-submatrix commutation check.
    BruteForce,
    /// Neither route applies: the graph is not strongly connected and too
    /// large to enumerate. `superstationary` then reports the fit only.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperstationarityCheck {
    pub superstationary: bool,
    pub a: f64,
    pub b: f64,
    /// `‖C − aA − bI‖_F / ‖C‖_F` of the fit.
    pub relative_residual: f64,
    pub strongly_connected: bool,
    pub method: CheckMethod,
}

/// Default enumeration limit for [`supercommute_bruteforce`].
pub const BRUTE_FORCE_MAX_N: usize = 12;

/// Tests `C ≈ a·A + b·I` by least squares. On graphs that are not strongly
/// connected the linear characterization does not apply; small instances
/// fall back to enumeration, larger ones are flagged inconclusive.
pub fn check_superstationary(adjacency: &DMatrix<f64>, c: &CovarianceEstimate, tol: f64) -> Result<SuperstationarityCheck> {
    let n = adjacency.nrows();
    if !adjacency.is_square() || c.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: c.dim() });
    }
    // Normal equations for min ‖C − aA − bI‖_F.
    let aa = adjacency.dot(adjacency);
    let ai = adjacency.trace();
    let ii = n as f64;
    let ca = c.matrix.dot(adjacency);
    let ci = c.matrix.trace();
    let det = aa * ii - ai * ai;
    let (a, b) = if det.abs() > 1e-12 * (aa * ii).max(1.0) {
        ((ca * ii - ci * ai) / det, (aa * ci - ai * ca) / det)
    } else {
        // A is (numerically) a multiple of I or zero; fit b alone.
        (0.0, if ii > 0.0 { ci / ii } else { 0.0 })
    };
    let residual = (&c.matrix - adjacency * a - DMatrix::identity(n, n) * b).norm();
    let scale = c.matrix.norm();
    let relative_residual = if scale > 0.0 { residual / scale } else { 0.0 };
    let fit_verdict = relative_residual <= tol;

    let strongly_connected = adjacency_strongly_connected(adjacency);
    let (superstationary, method) = if strongly_connected {
        (fit_verdict, CheckMethod::LinearFit)
    } else if n <= BRUTE_FORCE_MAX_N {
        (supercommute_bruteforce(adjacency, c, BRUTE_FORCE_MAX_N)?, CheckMethod::BruteForce)
    } else {
        (fit_verdict, CheckMethod::Inconclusive)
    };
    Ok(SuperstationarityCheck { superstationary, a, b, relative_residual, strongly_connected, method })
}

/// Commutator norm above which two principal submatrices count as not commuting.
pub const COMMUTE_TOLERANCE: f64 = 1e-8;

/// Smallest (in enumeration order) index subset whose principal submatrices
/// of `A` and `C` fail to commute, if any. Enumerates all `2ⁿ − 1` subsets.
pub fn find_noncommuting_subset(adjacency: &DMatrix<f64>, c: &CovarianceEstimate, max_n: usize) -> Result<Option<Vec<usize>>> {
    let n = adjacency.nrows();
    if !adjacency.is_square() || c.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: c.dim() });
    }
    if n > max_n || n >= usize::BITS as usize {
        return Err(Error::TooLarge { size: n, limit: max_n });
    }
    for mask in 1usize..(1usize << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let a_sub = adjacency.select_rows(idx.iter()).select_columns(idx.iter());
        let c_sub = c.matrix.select_rows(idx.iter()).select_columns(idx.iter());
        if (&a_sub * &c_sub - &c_sub * &a_sub).norm() > COMMUTE_TOLERANCE {
            return Ok(Some(idx));
        }
    }
    Ok(None)
}

/// True when every pair of corresponding principal submatrices commutes.
pub fn supercommute_bruteforce(adjacency: &DMatrix<f64>, c: &CovarianceEstimate, max_n: usize) -> Result<bool> {
    Ok(find_noncommuting_subset(adjacency, c, max_n)?.is_none())
}

/// Draws `t` samples of `U diag(√spectrum) w` with `w ~ N(0, I)`, using a
/// ChaCha8 stream seeded with `seed`.
pub fn sample_gwss_process(basis: &SpectralBasis, spectrum: &[f64], t: usize, seed: u64) -> Result<TimeSeriesMatrix> {
    let n = basis.dim();
    if spectrum.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: spectrum.len() });
    }
    if let Some(&bad) = spectrum.iter().find(|&&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("spectrum entry {bad} is not positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale: Vec<f64> = spectrum.iter().map(|s| s.sqrt()).collect();
    let white = DMatrix::from_fn(n, t, |i, _| scale[i] * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
    TimeSeriesMatrix::new(basis.eigenvectors() * white)
}
