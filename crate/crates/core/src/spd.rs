//! Validated symmetric positive (semi-)definite matrices and the small set of
//! spectral helpers the rest of the crate is built on.
//!
//! All tolerances are relative to the spectral scale
//! `max(1, max |eigenvalue|)` of the matrix being tested, so the same
//! thresholds work for unit covariances and for inputs in the hundreds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::f64::consts::PI;

use crate::error::{FusionError, Result};

pub const DEFAULT_SYM_TOL: f64 = 1e-9;
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

/// Relative tolerances used when validating matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub sym: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym: DEFAULT_SYM_TOL,
            psd: DEFAULT_PSD_TOL,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { sym: tol, psd: tol }
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of the symmetric part of `m`, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    DVector::from_vec(v)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)[0]
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let ev = eigenvalues(m);
    ev[ev.len() - 1]
}

/// `max(1, max |eigenvalue|)` of the symmetric part of `m`.
pub fn spectral_scale(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

/// Inverse of a symmetric positive definite matrix via Cholesky; `None` if
/// the factorization fails.
pub fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = symmetrize(m).cholesky()?;
    Some(symmetrize(&chol.inverse()))
}

/// `x^T M x`.
pub fn quad_form(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(m * x))
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(FusionError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(FusionError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A symmetric matrix whose smallest eigenvalue has been checked against the
/// PSD (or, when `strict`, the PD) threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    inner: DMatrix<f64>,
    strict: bool,
}

impl SpdMatrix {
    /// Validates `raw` with the default tolerances.
    pub fn new(raw: DMatrix<f64>, strict: bool) -> Result<Self> {
        validate_spd(raw, strict, &Tolerances::default())
    }

    pub fn from_row_slice(dim: usize, data: &[f64], strict: bool) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(FusionError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data), strict)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: DMatrix::identity(dim, dim),
            strict: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: DMatrix::zeros(dim, dim),
            strict: false,
        }
    }

    /// Symmetrizes a matrix produced by internal arithmetic and validates it.
    pub(crate) fn from_computed(m: DMatrix<f64>, strict: bool) -> Result<Self> {
        validate_spd(symmetrize(&m), strict, &Tolerances::default())
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    /// Whether the matrix passed the strict (positive definite) check.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        eigenvalues(&self.inner)
    }

    pub fn spectral_scale(&self) -> f64 {
        spectral_scale(&self.inner)
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        inverse_spd(&self.inner).ok_or(FusionError::SingularMatrix)
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        sqrt_psd(self)
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    /// `factor * self`; `factor` must be non-negative.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(FusionError::ParameterOutOfRange {
                name: "scale",
                value: factor,
            });
        }
        Ok(Self {
            inner: &self.inner * factor,
            strict: self.strict && factor > 0.0,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner)
    }
}

impl AsRef<DMatrix<f64>> for SpdMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.inner
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Checks symmetry and semi-definiteness of `raw`. Nothing is repaired: the
/// input is stored as given once it passes.
pub fn validate_spd(raw: DMatrix<f64>, strict: bool, tol: &Tolerances) -> Result<SpdMatrix> {
    check_square(&raw)?;
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(FusionError::InvalidInput("matrix has non-finite entries".into()));
    }
    let ev = eigenvalues(&raw);
    let scale = ev.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let asymmetry = (&raw - raw.transpose()).amax();
    if asymmetry > tol.sym * scale {
        return Err(FusionError::NotSymmetric { asymmetry });
    }
    let min_eigenvalue = if ev.is_empty() { 0.0 } else { ev[0] };
    if min_eigenvalue < -tol.psd * scale {
        return Err(FusionError::NotPositiveSemiDefinite { min_eigenvalue });
    }
    if strict && min_eigenvalue < tol.psd * scale {
        return Err(FusionError::NotPositiveDefinite { min_eigenvalue });
    }
    let strict = min_eigenvalue >= tol.psd * scale;
    Ok(SpdMatrix { inner: raw, strict })
}

/// `a ⪯ b` in the Loewner order: `λ_min(b - a) ≥ -tol · scale` where the
/// scale also covers the operands so nearly equal matrices compare as equal.
pub fn loewner_leq(a: &SpdMatrix, b: &SpdMatrix, tol: f64) -> Result<bool> {
    check_dim(a.dim(), b.dim())?;
    Ok(loewner_gap(a.matrix(), b.matrix()) >= -tol)
}

/// Normalized smallest eigenvalue of `b - a`, i.e. `λ_min(b - a) / scale`.
pub fn loewner_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = b - a;
    let ev = eigenvalues(&diff);
    let scale = ev
        .iter()
        .fold(1.0_f64, |acc, v| acc.max(v.abs()))
        .max(spectral_scale(a))
        .max(spectral_scale(b));
    ev[0] / scale
}

/// Principal (symmetric) square root; eigenvalues below zero are clamped.
pub fn sqrt_psd(m: &SpdMatrix) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(m.matrix());
    let roots = values.map(|v| v.max(0.0).sqrt());
    &vectors * DMatrix::from_diagonal(&roots) * vectors.transpose()
}

/// Principal square root of a raw symmetric matrix, rejecting inputs that are
/// not PSD within the default tolerance.
pub fn sqrt_psd_raw(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let spd = SpdMatrix::from_computed(m.clone(), false)?;
    Ok(sqrt_psd(&spd))
}

/// Points on the boundary `x^T P^{-1} x = 1` of a 2-D ellipse.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipse2D {
    pub thetas: Vec<f64>,
    pub points: Vec<[f64; 2]>,
}

impl Ellipse2D {
    /// Largest `|x^T P^{-1} x - 1|` over the sampled points.
    pub fn max_residual(&self, shape: &SpdMatrix) -> Result<f64> {
        let inv = shape.inverse()?;
        Ok(self
            .points
            .iter()
            .map(|p| {
                let x = DVector::from_column_slice(p);
                (quad_form(&inv, &x) - 1.0).abs()
            })
            .fold(0.0, f64::max))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn ellipse_boundary(p: &SpdMatrix, count: usize) -> Result<Ellipse2D> {
    if p.dim() != 2 {
        return Err(FusionError::DimensionNotTwo { found: p.dim() });
    }
    if !p.is_strict() {
        return Err(FusionError::SingularMatrix);
    }
    if count == 0 {
        return Err(FusionError::ParameterOutOfRange {
            name: "count",
            value: 0.0,
        });
    }
    let root = sqrt_psd(p);
    let mut thetas = Vec::with_capacity(count);
    let mut points = Vec::with_capacity(count);
    for k in 0..count {
        let theta = 2.0 * PI * k as f64 / count as f64;
        let (s, c) = theta.sin_cos();
        let x = &root * DVector::from_column_slice(&[c, s]);
        thetas.push(theta);
        points.push([x[0], x[1]]);
    }
    Ok(Ellipse2D { thetas, points })
}
