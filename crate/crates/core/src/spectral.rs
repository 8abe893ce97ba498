//! Eigendecomposition of symmetric shift operators, the graph Fourier
//! transform, graph filters and spectral kernels.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Absolute tolerance on `|S_ij − S_ji|` accepted as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftKind {
    Adjacency,
    DirectedLaplacian,
    Other,
}

impl ShiftKind {
    /// Materializes this shift operator for `g`.
    pub fn matrix(self, g: &Graph) -> Result<DMatrix<f64>> {
        match self {
            ShiftKind::Adjacency => Ok(g.adjacency()),
            ShiftKind::DirectedLaplacian => Ok(g.directed_laplacian()),
            ShiftKind::Other => Err(Error::InvalidParameter("no graph construction for shift kind `other`".into())),
        }
    }
}

/// Orthonormal eigenbasis of a symmetric shift operator.
///
/// Eigenvalues are ascending. Each eigenvector is signed so that its first
/// component of largest magnitude is positive, and eigenvectors sharing an
/// eigenvalue are ordered by the index of that component. Within a repeated
/// eigenvalue the basis is otherwise whatever the solver returned, so
/// quantities that are not invariant under rotations of the eigenspace
/// (the stationarity ratio among them) inherit that arbitrariness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRecord", into = "BasisRecord")]
pub struct SpectralBasis {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    shift_kind: ShiftKind,
}

/// Serialized form: eigenvectors are stored column by column.
#[derive(Serialize, Deserialize)]
struct BasisRecord {
    shift_kind: ShiftKind,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

impl From<SpectralBasis> for BasisRecord {
    fn from(b: SpectralBasis) -> Self {
        Self {
            shift_kind: b.shift_kind,
            eigenvalues: b.eigenvalues.iter().copied().collect(),
            eigenvectors: b.eigenvectors.column_iter().map(|c| c.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<BasisRecord> for SpectralBasis {
    type Error = Error;

    fn try_from(r: BasisRecord) -> Result<Self> {
        let n = r.eigenvalues.len();
        if r.eigenvectors.len() != n || r.eigenvectors.iter().any(|c| c.len() != n) {
            return Err(Error::Parse(format!("basis of dimension {n} has malformed eigenvectors")));
        }
        let vectors = DMatrix::from_fn(n, n, |i, k| r.eigenvectors[k][i]);
        SpectralBasis::from_parts(DVector::from_vec(r.eigenvalues), vectors, r.shift_kind)
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Index of the first component within `1e-9` of the largest magnitude.
fn leading_index(v: &[f64]) -> usize {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter().position(|x| x.abs() >= max - 1e-9).unwrap_or(0)
}

impl SpectralBasis {
    pub fn from_shift(shift: &DMatrix<f64>, shift_kind: ShiftKind) -> Result<Self> {
        if !shift.is_square() {
            return Err(Error::DimensionMismatch { expected: shift.nrows(), found: shift.ncols() });
        }
        if shift.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = max_asymmetry(shift);
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
        let n = shift.nrows();
        if n == 0 {
            return Ok(Self { eigenvalues: DVector::zeros(0), eigenvectors: DMatrix::zeros(0, 0), shift_kind });
        }
        let sym = (shift + shift.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);

        let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
            .map(|k| {
                let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
                let lead = leading_index(&v);
                if v[lead] < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                (eig.eigenvalues[k], v)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        // Order eigenvectors inside each group of (numerically) repeated eigenvalues.
        let scale = pairs.iter().fold(1.0f64, |m, p| m.max(p.0.abs()));
        let tol = 1e-9 * scale;
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && pairs[end].0 - pairs[end - 1].0 <= tol {
                end += 1;
            }
            pairs[start..end].sort_by_key(|p| leading_index(&p.1));
            start = end;
        }

        let eigenvalues = DVector::from_iterator(n, pairs.iter().map(|p| p.0));
        let eigenvectors = DMatrix::from_fn(n, n, |i, k| pairs[k].1[i]);
        Ok(Self { eigenvalues, eigenvectors, shift_kind })
    }

    /// Builds a basis from explicit parts, checking orthonormality.
    pub fn from_parts(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>, shift_kind: ShiftKind) -> Result<Self> {
        let n = eigenvalues.len();
        if eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: eigenvectors.nrows() });
        }
        if eigenvalues.iter().chain(eigenvectors.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let gram = eigenvectors.transpose() * &eigenvectors;
        let defect = (gram - DMatrix::identity(n, n)).norm();
        if defect > 1e-8 {
            return Err(Error::Numerical(format!("eigenvectors not orthonormal (defect {defect:e})")));
        }
        Ok(Self { eigenvalues, eigenvectors, shift_kind })
    }

    pub fn identity(n: usize) -> Self {
        Self { eigenvalues: DVector::zeros(n), eigenvectors: DMatrix::identity(n, n), shift_kind: ShiftKind::Other }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn shift_kind(&self) -> ShiftKind {
        self.shift_kind
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: len });
        }
        Ok(())
    }

    /// `x̂ = Uᵀ x`.
    pub fn gft(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x.len())?;
        Ok(self.eigenvectors.tr_mul(x))
    }

    /// `x = U x̂`.
    pub fn igft(&self, xhat: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(xhat.len())?;
        Ok(&self.eigenvectors * xhat)
    }

    /// Column-wise GFT of an `n × T` signal matrix.
    pub fn gft_columns(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x.nrows())?;
        Ok(self.eigenvectors.tr_mul(x))
    }

    pub fn igft_columns(&self, xhat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(xhat.nrows())?;
        Ok(&self.eigenvectors * xhat)
    }

    fn spectral_values(&self, h: impl Fn(f64) -> f64, nonnegative: bool) -> Result<DVector<f64>> {
        let values = self.eigenvalues.map(&h);
        for (lambda, value) in self.eigenvalues.iter().zip(values.iter()) {
            if !value.is_finite() || (nonnegative && *value < 0.0) {
                return Err(Error::InvalidSpectralValue { eigenvalue: *lambda, value: *value });
            }
        }
        Ok(values)
    }

    /// Applies the graph filter `U h(Λ) Uᵀ` to `x` without forming it.
    pub fn apply_filter(&self, h: impl Fn(f64) -> f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let response = self.spectral_values(h, false)?;
        let xhat = self.gft(x)?;
        self.igft(&xhat.component_mul(&response))
    }

    /// Materialized filter matrix `U h(Λ) Uᵀ`.
    pub fn filter_matrix(&self, h: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        let response = self.spectral_values(h, false)?;
        Ok(self.synthesize(&response))
    }

    /// Kernel `K = Σ r(λ_i) u_i u_iᵀ`; `r` must be nonnegative on the spectrum.
    pub fn spectral_kernel(&self, r: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        let response = self.spectral_values(r, true)?;
        Ok(self.synthesize(&response))
    }

    /// `U diag(d) Uᵀ`, symmetrized.
    pub fn synthesize(&self, diagonal: &DVector<f64>) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, k| self.eigenvectors[(i, k)] * diagonal[k]);
        let m = scaled * self.eigenvectors.transpose();
        (&m + m.transpose()) * 0.5
    }

    /// Writes eigenvalues (one per line under an `eigenvalue` header) and the
    /// eigenvector matrix (one row per vertex, columns `u0..u{n-1}`).
    pub fn write_csv<W1: Write, W2: Write>(&self, eigenvalues: W1, eigenvectors: W2) -> Result<()> {
        let mut w = csv::Writer::from_writer(eigenvalues);
        w.write_record(["eigenvalue"])?;
        for v in self.eigenvalues.iter() {
            w.write_record([v.to_string()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(eigenvectors);
        w.write_record((0..self.dim()).map(|k| format!("u{k}")))?;
        for i in 0..self.dim() {
            w.write_record(self.eigenvectors.row(i).iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R1: Read, R2: Read>(eigenvalues: R1, eigenvectors: R2, shift_kind: ShiftKind) -> Result<Self> {
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
        let mut values = Vec::new();
        for rec in csv::Reader::from_reader(eigenvalues).records() {
            values.push(parse(&rec?[0])?);
        }
        let n = values.len();
        let mut vectors = Vec::with_capacity(n * n);
        let mut rows = 0;
        for rec in csv::Reader::from_reader(eigenvectors).records() {
            let rec = rec?;
            if rec.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: rec.len() });
            }
            for field in rec.iter() {
                vectors.push(parse(field)?);
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::DimensionMismatch { expected: n, found: rows });
        }
        Self::from_parts(DVector::from_vec(values), DMatrix::from_row_slice(n, n, &vectors), shift_kind)
    }
}

/// Free-function form of [`SpectralBasis::from_shift`].
pub fn eigendecompose(shift: &DMatrix<f64>, shift_kind: ShiftKind) -> Result<SpectralBasis> {
    SpectralBasis::from_shift(shift, shift_kind)
}

/// Heat diffusion response `exp(−λ / 2σ²)`.
pub fn heat_kernel(sigma: f64) -> impl Fn(f64) -> f64 {
    move |lambda| (-lambda / (2.0 * sigma * sigma)).exp()
}
