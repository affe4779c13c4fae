//! Truncated Karhunen–Loève representation of Gaussian measures.
//!
//! A covariance is stored as `C = P Σ Pᵀ` with `P` orthonormal (nodal x dim)
//! and `Σ` the non-increasing eigenvalues. Samplers work in whitened
//! coefficients `z = Σ^{-1/2} Pᵀ u`, where the prior is `N(0, I)` and every
//! reference-measure perturbation is a diagonal `Λ`.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dct::CosineTransform2d;
use crate::error::{check_len, Error, Result};
use crate::rng::standard_normals;

/// Lower clamp on every entry of a [`DiagonalScaling`].
pub const D_MIN: f64 = 1e-8;

/// Cosine basis of an `n1 x n2` grid restricted to a set of modes, ordered
/// by increasing Laplacian eigenvalue (so decreasing prior variance for any
/// monotone spectral density).
#[derive(Debug, Clone)]
pub struct CosineBasis {
    transform: CosineTransform2d,
    modes: Vec<usize>,
    laplacian: Vec<f64>,
}

impl CosineBasis {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self::truncated(n1, n2, n1 * n2)
    }

    pub fn truncated(n1: usize, n2: usize, dim: usize) -> Self {
        let transform = CosineTransform2d::new(n1, n2);
        let mut modes: Vec<usize> = (0..n1 * n2).collect();
        // Stable sort: ties keep flat-index order, which keeps runs reproducible.
        modes.sort_by(|&a, &b| transform.laplacian_eigenvalue(a).total_cmp(&transform.laplacian_eigenvalue(b)));
        modes.truncate(dim.min(n1 * n2));
        let laplacian = modes.iter().map(|&m| transform.laplacian_eigenvalue(m)).collect();
        Self { transform, modes, laplacian }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.transform.shape()
    }

    /// Laplacian eigenvalue of each retained mode, in coefficient order.
    pub fn laplacian_eigenvalues(&self) -> &[f64] {
        &self.laplacian
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }
}

#[derive(Debug, Clone)]
pub enum BasisMap {
    /// Explicit `nodal x dim` matrix with orthonormal columns.
    Dense(DMatrix<f64>),
    Cosine(CosineBasis),
}

impl BasisMap {
    pub fn dim(&self) -> usize {
        match self {
            BasisMap::Dense(p) => p.ncols(),
            BasisMap::Cosine(c) => c.modes.len(),
        }
    }

    pub fn nodal_dim(&self) -> usize {
        match self {
            BasisMap::Dense(p) => p.nrows(),
            BasisMap::Cosine(c) => c.transform.size(),
        }
    }

    /// `Pᵀ u`.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        match self {
            BasisMap::Dense(p) => (p.tr_mul(&DVector::from_column_slice(u))).as_slice().to_vec(),
            BasisMap::Cosine(c) => {
                let a = c.transform.forward(u);
                c.modes.iter().map(|&m| a[m]).collect()
            }
        }
    }

    /// `P a`.
    pub fn embed(&self, a: &[f64]) -> Vec<f64> {
        match self {
            BasisMap::Dense(p) => (p * DVector::from_column_slice(a)).as_slice().to_vec(),
            BasisMap::Cosine(c) => {
                let mut full = vec![0.0; c.transform.size()];
                for (&m, &v) in c.modes.iter().zip(a) {
                    full[m] = v;
                }
                c.transform.inverse(&full)
            }
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match self {
            BasisMap::Dense(p) => p.clone(),
            BasisMap::Cosine(_) => {
                let (n, d) = (self.nodal_dim(), self.dim());
                let mut m = DMatrix::zeros(n, d);
                let mut e = vec![0.0; d];
                for j in 0..d {
                    e[j] = 1.0;
                    m.set_column(j, &DVector::from_vec(self.embed(&e)));
                    e[j] = 0.0;
                }
                m
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralCovariance {
    eigenvalues: Vec<f64>,
    sqrt_eigenvalues: Vec<f64>,
    basis: BasisMap,
    sqrt_matrix: OnceLock<DMatrix<f64>>,
}

impl SpectralCovariance {
    pub fn new(eigenvalues: Vec<f64>, basis: BasisMap) -> Result<Self> {
        check_len(basis.dim(), eigenvalues.len())?;
        if eigenvalues.is_empty() {
            return Err(Error::InvalidParameter("covariance needs at least one eigenvalue".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::NotPositiveDefinite(format!("eigenvalue {bad}")));
        }
        for w in eigenvalues.windows(2) {
            if w[1] > w[0] * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "eigenvalues must be non-increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let BasisMap::Dense(p) = &basis {
            let gram = p.tr_mul(p);
            let err = (gram - DMatrix::identity(p.ncols(), p.ncols())).abs().max();
            if err > 1e-10 {
                return Err(Error::InvalidParameter(format!("basis not orthonormal (error {err:e})")));
            }
        }
        let sqrt_eigenvalues = eigenvalues.iter().map(|s| s.sqrt()).collect();
        Ok(Self { eigenvalues, sqrt_eigenvalues, basis, sqrt_matrix: OnceLock::new() })
    }

    /// Identity basis with the given eigenvalues; nodal and coefficient
    /// coordinates coincide up to scaling.
    pub fn diagonal(eigenvalues: Vec<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        Self::new(eigenvalues, BasisMap::Dense(DMatrix::identity(n, n)))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn nodal_dim(&self) -> usize {
        self.basis.nodal_dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn sqrt_eigenvalues(&self) -> &[f64] {
        &self.sqrt_eigenvalues
    }

    pub fn basis(&self) -> &BasisMap {
        &self.basis
    }

    /// `z = Σ^{-1/2} Pᵀ u`.
    pub fn to_coefficients(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nodal_dim(), u.len())?;
        let mut a = self.basis.project(u);
        for (v, s) in a.iter_mut().zip(&self.sqrt_eigenvalues) {
            *v /= s;
        }
        Ok(a)
    }

    /// `u = P Σ^{1/2} z`.
    pub fn from_coefficients(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), z.len())?;
        let a: Vec<f64> = z.iter().zip(&self.sqrt_eigenvalues).map(|(v, s)| v * s).collect();
        Ok(self.basis.embed(&a))
    }

    /// `Sᵀ w = Σ^{1/2} Pᵀ w`; maps a nodal gradient to the coefficient gradient.
    pub fn pullback(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nodal_dim(), w.len())?;
        let mut a = self.basis.project(w);
        for (v, s) in a.iter_mut().zip(&self.sqrt_eigenvalues) {
            *v *= s;
        }
        Ok(a)
    }

    /// `C u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nodal_dim(), u.len())?;
        let mut a = self.basis.project(u);
        for (v, s) in a.iter_mut().zip(&self.eigenvalues) {
            *v *= s;
        }
        Ok(self.basis.embed(&a))
    }

    /// `C⁺ u`, the inverse on the range of `P`.
    pub fn apply_inverse(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nodal_dim(), u.len())?;
        let mut a = self.basis.project(u);
        for (v, s) in a.iter_mut().zip(&self.eigenvalues) {
            *v /= s;
        }
        Ok(self.basis.embed(&a))
    }

    /// Dense `S = P Σ^{1/2}` (nodal x dim), built once on first use.
    pub fn sqrt_matrix(&self) -> &DMatrix<f64> {
        self.sqrt_matrix.get_or_init(|| {
            let mut s = self.basis.matrix();
            for (j, sq) in self.sqrt_eigenvalues.iter().enumerate() {
                s.column_mut(j).scale_mut(*sq);
            }
            s
        })
    }

    /// Dense `C`, for oracles and small problems.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let s = self.sqrt_matrix();
        s * s.transpose()
    }
}

/// Multiplicative eigenvalue perturbation `Λ = diag(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling {
    d: Vec<f64>,
}

impl DiagonalScaling {
    /// Entries below [`D_MIN`] are clamped; non-finite entries are rejected.
    pub fn new(d: Vec<f64>) -> Result<Self> {
        Self::with_floor(d, D_MIN)
    }

    pub fn with_floor(mut d: Vec<f64>, floor: f64) -> Result<Self> {
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("diagonal scaling"));
        }
        for v in &mut d {
            *v = v.max(floor);
        }
        Ok(Self { d })
    }

    pub fn identity(n: usize) -> Self {
        Self { d: vec![1.0; n] }
    }

    /// `head` followed by ones up to length `n`.
    pub fn from_head(head: &[f64], n: usize) -> Result<Self> {
        let mut d = vec![1.0; n];
        let k = head.len().min(n);
        d[..k].copy_from_slice(&head[..k]);
        Self::new(d)
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn is_identity(&self) -> bool {
        self.d.iter().all(|&v| v == 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct GaussianMeasure {
    pub mean: Vec<f64>,
    pub cov: Arc<SpectralCovariance>,
    pub scaling: Option<DiagonalScaling>,
}

impl GaussianMeasure {
    pub fn new(mean: Vec<f64>, cov: Arc<SpectralCovariance>, scaling: Option<DiagonalScaling>) -> Result<Self> {
        check_len(cov.dim(), mean.len())?;
        if let Some(s) = &scaling {
            check_len(cov.dim(), s.len())?;
        }
        Ok(Self { mean, cov, scaling })
    }

    pub fn prior(cov: Arc<SpectralCovariance>) -> Self {
        Self { mean: vec![0.0; cov.dim()], cov, scaling: None }
    }

    /// Squared Cameron–Martin norm of the mean; finite at any truncation.
    pub fn mean_norm_sq(&self) -> f64 {
        match &self.scaling {
            Some(s) => cameron_martin_norm_sq(&self.mean, s).expect("lengths checked at construction"),
            None => self.mean.iter().map(|m| m * m).sum(),
        }
    }
}

/// Coefficient-space draw `mean + Λ^{1/2} ξ`.
pub fn sample_prior<R: Rng + ?Sized>(measure: &GaussianMeasure, rng: &mut R) -> Vec<f64> {
    let xi = standard_normals(rng, measure.mean.len());
    match &measure.scaling {
        Some(s) => measure.mean.iter().zip(xi).zip(s.as_slice()).map(|((m, x), d)| m + d.sqrt() * x).collect(),
        None => measure.mean.iter().zip(xi).map(|(m, x)| m + x).collect(),
    }
}

/// `Σ (d_k − 1)²`, the diagonal Feldman–Hájek criterion.
pub fn equivalence_diagnostic(scaling: &DiagonalScaling) -> f64 {
    scaling.d.iter().fold(0.0, |s, d| s + (d - 1.0) * (d - 1.0))
}

/// `½ Σ (1 − 1/d_k) z_k²`.
pub fn change_of_measure_logterm(z: &[f64], scaling: &DiagonalScaling) -> Result<f64> {
    check_len(scaling.len(), z.len())?;
    Ok(0.5 * z.iter().zip(&scaling.d).map(|(z, d)| (1.0 - 1.0 / d) * z * z).sum::<f64>())
}

/// `Σ m_k² / d_k`.
pub fn cameron_martin_norm_sq(m: &[f64], scaling: &DiagonalScaling) -> Result<f64> {
    check_len(scaling.len(), m.len())?;
    Ok(m.iter().zip(&scaling.d).map(|(m, d)| m * m / d).sum())
}
