//! Binary Gaussian-process classification with a logistic link.
//!
//! `Φ(u) = Σ_i [log(1 + e^{u_i}) − y_i u_i]`, the Bernoulli negative
//! log-likelihood; it is already nonnegative so no constant is added.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_input, sigmoid, softplus, Capabilities, GrowthBound, TargetModel};
use crate::error::{Error, Result};
use crate::gaussian::{sample_prior, BasisMap, GaussianMeasure, SpectralCovariance};
use crate::rng::{chain_rng, standard_normals};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticPriorConfig {
    pub kernel_variance: f64,
    pub lengthscale: f64,
    /// Added to the kernel diagonal; defaults to `1e-8 · kernel_variance`.
    #[serde(default)]
    pub jitter: Option<f64>,
    /// Number of leading eigenpairs kept; defaults to all.
    #[serde(default)]
    pub truncation: Option<usize>,
}

impl LogisticPriorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if !(self.kernel_variance.is_finite() && self.kernel_variance > 0.0) {
            return bad("kernel_variance must be positive");
        }
        if !(self.lengthscale.is_finite() && self.lengthscale > 0.0) {
            return bad("lengthscale must be positive");
        }
        if let Some(j) = self.jitter {
            if !(j.is_finite() && j >= 0.0) {
                return bad("jitter must be nonnegative");
            }
        }
        if self.truncation == Some(0) {
            return bad("truncation must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierData {
    pub locations: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl ClassifierData {
    pub fn new(locations: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if locations.len() != labels.len() {
            return Err(Error::InvalidParameter(format!("{} locations but {} labels", locations.len(), labels.len())));
        }
        if locations.is_empty() {
            return Err(Error::InvalidParameter("classifier data is empty".into()));
        }
        let d = locations[0].len();
        if d == 0 {
            return Err(Error::InvalidParameter("locations need at least one coordinate".into()));
        }
        for (i, s) in locations.iter().enumerate() {
            if s.len() != d {
                return Err(Error::InvalidParameter(format!("location {i} has {} coordinates, expected {d}", s.len())));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("classifier location"));
            }
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::InvalidParameter(format!("label {} at row {i} is not 0 or 1", labels[i])));
        }
        Ok(Self { locations, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.locations[0].len()
    }
}

/// Eigendecomposition of `σ_x² exp(−‖s_i − s_j‖ / (2l²)) + jitter·I`.
pub fn classifier_prior(locations: &[Vec<f64>], cfg: &LogisticPriorConfig) -> Result<SpectralCovariance> {
    cfg.validate()?;
    let n = locations.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no locations".into()));
    }
    let jitter = cfg.jitter.unwrap_or(1e-8 * cfg.kernel_variance);
    let scale = 1.0 / (2.0 * cfg.lengthscale * cfg.lengthscale);
    let k = DMatrix::from_fn(n, n, |i, j| {
        let dist = locations[i].iter().zip(&locations[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        cfg.kernel_variance * (-scale * dist).exp() + if i == j { jitter } else { 0.0 }
    });
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let dim = cfg.truncation.unwrap_or(n);
    if dim > n {
        return Err(Error::InvalidParameter(format!("truncation {dim} exceeds {n} locations")));
    }
    let values: Vec<f64> = order[..dim].iter().map(|&i| eig.eigenvalues[i]).collect();
    if let Some(v) = values.iter().find(|v| **v <= 0.0) {
        return Err(Error::NotPositiveDefinite(format!("kernel eigenvalue {v:e} after jitter {jitter:e}")));
    }
    let mut p = DMatrix::zeros(n, dim);
    for (c, &i) in order[..dim].iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        p.set_column(c, &(col * sign));
    }
    SpectralCovariance::new(values, BasisMap::Dense(p))
}

#[derive(Debug, Clone)]
pub struct LogisticClassifierModel {
    data: ClassifierData,
    labels: Vec<f64>,
    prior: SpectralCovariance,
}

impl LogisticClassifierModel {
    pub fn new(data: ClassifierData, cfg: &LogisticPriorConfig) -> Result<Self> {
        let prior = classifier_prior(&data.locations, cfg)?;
        let labels = data.labels.iter().map(|&y| y as f64).collect();
        Ok(Self { data, labels, prior })
    }

    pub fn data(&self) -> &ClassifierData {
        &self.data
    }
}

impl TargetModel for LogisticClassifierModel {
    fn prior(&self) -> &SpectralCovariance {
        &self.prior
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_gradient: true, has_hessian: true }
    }

    fn potential(&self, u: &[f64]) -> Result<f64> {
        check_input(u, self.labels.len(), "classifier potential")?;
        Ok(u.iter().zip(&self.labels).map(|(&u, &y)| softplus(u) - y * u).sum())
    }

    fn grad_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.labels.len(), "classifier gradient")?;
        Ok(u.iter().zip(&self.labels).map(|(&u, &y)| sigmoid(u) - y).collect())
    }

    fn hessian_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.labels.len(), "classifier hessian")?;
        Ok(u.iter()
            .map(|&u| {
                let s = sigmoid(u);
                s * (1.0 - s)
            })
            .collect())
    }

    fn growth_bound(&self) -> Option<GrowthBound> {
        // softplus(u) − yu ≤ log 2 + |u| and Σ|u_i| ≤ √N ‖u‖.
        let n = self.labels.len() as f64;
        Some(GrowthBound { k: (n * std::f64::consts::LN_2).max(n.sqrt()), p: 1.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSynthesis {
    pub n_points: usize,
    pub input_dim: usize,
}

/// Locations are standard normal in `R^D`; the latent field is a prior draw
/// and labels are Bernoulli through the logistic link. Returns the dataset
/// and the nodal true field.
pub fn simulate_classifier(
    synth: &ClassifierSynthesis,
    prior_cfg: &LogisticPriorConfig,
    true_field_seed: u64,
    obs_seed: u64,
) -> Result<(ClassifierData, Vec<f64>)> {
    if synth.n_points == 0 || synth.input_dim == 0 {
        return Err(Error::InvalidParameter("synthetic classifier needs points and dimensions".into()));
    }
    let mut obs_rng = chain_rng(obs_seed);
    let locations: Vec<Vec<f64>> =
        (0..synth.n_points).map(|_| standard_normals(&mut obs_rng, synth.input_dim)).collect();
    let prior = std::sync::Arc::new(classifier_prior(&locations, prior_cfg)?);
    let z = sample_prior(&GaussianMeasure::prior(prior.clone()), &mut chain_rng(true_field_seed));
    let field = prior.from_coefficients(&z)?;
    let labels = field.iter().map(|&u| u8::from(obs_rng.random::<f64>() < sigmoid(u))).collect();
    Ok((ClassifierData::new(locations, labels)?, field))
}
