//! Log-Gaussian Cox process on a grid of cells.
//!
//! `Φ(u) = Σ_i [a e^{u_i} − y_i u_i] + c`, with `c = −Σ_{y_i>0} (y_i − y_i log(y_i / a))`
//! the negated sum of per-cell minima, so `Φ ≥ 0`.
//!
//! The prior is an exponential-type field in physical units: the spectral
//! weight of Laplacian mode `λ_k` is `(τ⁻² + λ_k / h²)^{−3/2}` with `h` the
//! cell side, normalised so the average marginal variance is `σ²`. Mode order
//! depends only on `λ_k`, so whitened coefficients keep their meaning when
//! `(σ, τ)` changes.

use std::sync::Arc;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{check_input, Capabilities, LatticeCell, LatticeData, TargetModel};
use crate::error::{Error, Result};
use crate::gaussian::{sample_prior, BasisMap, CosineBasis, GaussianMeasure, SpectralCovariance};
use crate::rng::chain_rng;

/// Independent normals on `(log σ, log τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperPrior {
    pub mean: [f64; 2],
    pub sd: [f64; 2],
}

impl Default for HyperPrior {
    fn default() -> Self {
        Self { mean: [0.0, 10.0], sd: [1.5, 1.5] }
    }
}

impl HyperPrior {
    /// Unnormalised log density at `θ = (log σ, log τ)`.
    pub fn log_density(&self, theta: [f64; 2]) -> f64 {
        (0..2).map(|i| -0.5 * ((theta[i] - self.mean[i]) / self.sd[i]).powi(2)).sum()
    }
}

fn default_cell_area() -> f64 {
    1.0
}

fn default_cell_size() -> f64 {
    1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgcpConfig {
    pub n1: usize,
    pub n2: usize,
    /// Intensity multiplier `a` per cell.
    #[serde(default = "default_cell_area")]
    pub cell_area: f64,
    /// Physical side length of a cell, in the units of `τ`.
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    pub sigma: f64,
    pub tau: f64,
    #[serde(default)]
    pub hyper_prior: HyperPrior,
}

impl LgcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidParameter("grid dimensions must be positive".into()));
        }
        for (name, v) in [
            ("cell_area", self.cell_area),
            ("cell_size", self.cell_size),
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("hyper_prior.sd[0]", self.hyper_prior.sd[0]),
            ("hyper_prior.sd[1]", self.hyper_prior.sd[1]),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

pub fn lgcp_prior(n1: usize, n2: usize, cell_size: f64, sigma: f64, tau: f64) -> Result<SpectralCovariance> {
    lgcp_prior_on(CosineBasis::new(n1, n2), cell_size, sigma, tau)
}

/// [`lgcp_prior`] on a prebuilt basis; the θ update calls this every step,
/// and building the basis dominates the cost.
fn lgcp_prior_on(basis: CosineBasis, cell_size: f64, sigma: f64, tau: f64) -> Result<SpectralCovariance> {
    if !(sigma.is_finite() && sigma > 0.0 && tau.is_finite() && tau > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("hyperparameters sigma={sigma}, tau={tau}")));
    }
    let inv_h2 = 1.0 / (cell_size * cell_size);
    let inv_t2 = 1.0 / (tau * tau);
    let w: Vec<f64> = basis.laplacian_eigenvalues().iter().map(|l| (inv_t2 + l * inv_h2).powf(-1.5)).collect();
    let total: f64 = w.iter().sum();
    let scale = sigma * sigma * w.len() as f64 / total;
    let eig: Vec<f64> = w.iter().map(|w| w * scale).collect();
    if eig.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!("spectrum degenerate at sigma={sigma}, tau={tau}")));
    }
    SpectralCovariance::new(eig, BasisMap::Cosine(basis))
}

#[derive(Debug, Clone)]
pub struct LgcpModel {
    cfg: LgcpConfig,
    counts: Arc<Vec<f64>>,
    constant: f64,
    prior: SpectralCovariance,
}

impl LgcpModel {
    /// Cells absent from `data` have zero counts.
    pub fn new(cfg: &LgcpConfig, data: &LatticeData) -> Result<Self> {
        cfg.validate()?;
        let idx = data.flat_indices(cfg.n1, cfg.n2)?;
        let mut counts = vec![0.0; cfg.n1 * cfg.n2];
        for (&k, c) in idx.iter().zip(&data.cells) {
            counts[k] = c.count as f64;
        }
        let a = cfg.cell_area;
        let constant = -counts.iter().filter(|&&y| y > 0.0).map(|&y| y - y * (y / a).ln()).sum::<f64>();
        let prior = lgcp_prior(cfg.n1, cfg.n2, cfg.cell_size, cfg.sigma, cfg.tau)?;
        Ok(Self { cfg: cfg.clone(), counts: Arc::new(counts), constant, prior })
    }

    /// Same data with the prior rebuilt at `(σ, τ)`.
    pub fn with_hyper(&self, sigma: f64, tau: f64) -> Result<Self> {
        let BasisMap::Cosine(basis) = self.prior.basis() else { unreachable!("lgcp priors use the cosine basis") };
        let prior = lgcp_prior_on(basis.clone(), self.cfg.cell_size, sigma, tau)?;
        let cfg = LgcpConfig { sigma, tau, ..self.cfg.clone() };
        Ok(Self { cfg, counts: self.counts.clone(), constant: self.constant, prior })
    }

    pub fn config(&self) -> &LgcpConfig {
        &self.cfg
    }

    pub fn hyper(&self) -> (f64, f64) {
        (self.cfg.sigma, self.cfg.tau)
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// The constant `c` added to the Poisson negative log-likelihood.
    pub fn additive_constant(&self) -> f64 {
        self.constant
    }
}

impl TargetModel for LgcpModel {
    fn prior(&self) -> &SpectralCovariance {
        &self.prior
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_gradient: true, has_hessian: true }
    }

    fn potential(&self, u: &[f64]) -> Result<f64> {
        check_input(u, self.counts.len(), "LGCP potential")?;
        let a = self.cfg.cell_area;
        let s: f64 = u.iter().zip(self.counts.iter()).map(|(&u, &y)| a * u.exp() - y * u).sum();
        Ok(s + self.constant)
    }

    fn grad_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.counts.len(), "LGCP gradient")?;
        let a = self.cfg.cell_area;
        Ok(u.iter().zip(self.counts.iter()).map(|(&u, &y)| a * u.exp() - y).collect())
    }

    fn hessian_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.counts.len(), "LGCP hessian")?;
        let a = self.cfg.cell_area;
        Ok(u.iter().map(|&u| a * u.exp()).collect())
    }
}

/// Field drawn at the configured `(σ, τ)`, counts `Poisson(a e^{u_i})`;
/// every cell is listed in the returned data.
pub fn simulate_lgcp(cfg: &LgcpConfig, true_field_seed: u64, obs_seed: u64) -> Result<(LatticeData, Vec<f64>)> {
    cfg.validate()?;
    let prior = Arc::new(lgcp_prior(cfg.n1, cfg.n2, cfg.cell_size, cfg.sigma, cfg.tau)?);
    let z = sample_prior(&GaussianMeasure::prior(prior.clone()), &mut chain_rng(true_field_seed));
    let field = prior.from_coefficients(&z)?;
    let mut rng = chain_rng(obs_seed);
    let mut cells = Vec::with_capacity(field.len());
    for (k, &u) in field.iter().enumerate() {
        let rate = cfg.cell_area * u.exp();
        let count = if rate > 0.0 {
            Poisson::new(rate).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(&mut rng) as u32
        } else {
            0
        };
        cells.push(LatticeCell { row: k / cfg.n2, col: k % cfg.n2, count, trials: None });
    }
    Ok((LatticeData { cells }, field))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> LgcpConfig {
        LgcpConfig {
            n1: 4,
            n2: 3,
            cell_area: 1.0,
            cell_size: 1000.0,
            sigma: 1.0,
            tau: 2000.0,
            hyper_prior: HyperPrior::default(),
        }
    }

    fn data(counts: &[u32]) -> LatticeData {
        LatticeData {
            cells: counts
                .iter()
                .enumerate()
                .map(|(k, &c)| LatticeCell { row: k / 3, col: k % 3, count: c, trials: None })
                .collect(),
        }
    }

    #[test]
    fn potential_at_zero_counts_cells() {
        let counts = [0, 2, 1, 0, 5, 0, 0, 0, 3, 1, 0, 0];
        let m = LgcpModel::new(&cfg(), &data(&counts)).unwrap();
        let phi = m.potential(&[0.0; 12]).unwrap();
        assert!((phi - (12.0 + m.additive_constant())).abs() < 1e-12);
        let g = m.grad_potential(&[0.0; 12]).unwrap();
        for (g, y) in g.iter().zip(counts) {
            assert_eq!(*g, 1.0 - y as f64);
        }
        assert_eq!(m.hessian_potential(&[0.0; 12]).unwrap(), vec![1.0; 12]);
    }

    #[test]
    fn potential_vanishes_at_the_minimiser() {
        let counts = [0, 2, 1, 0, 5, 0, 0, 0, 3, 1, 0, 0];
        let m = LgcpModel::new(&cfg(), &data(&counts)).unwrap();
        let u: Vec<f64> = counts.iter().map(|&y| if y > 0 { (y as f64).ln() } else { -700.0 }).collect();
        assert!(m.potential(&u).unwrap().abs() < 1e-12);
    }

    #[test]
    fn average_marginal_variance_is_sigma_squared() {
        let p = lgcp_prior(8, 8, 1000.0, 1.7, 3000.0).unwrap();
        let mean: f64 = p.eigenvalues().iter().sum::<f64>() / 64.0;
        assert!((mean - 1.7f64.powi(2)).abs() < 1e-12);
        assert!(lgcp_prior(8, 8, 1000.0, 0.0, 3000.0).is_err());
    }

    #[test]
    fn hyper_prior_peaks_at_mean() {
        let h = HyperPrior::default();
        assert_eq!(h.log_density([0.0, 10.0]), 0.0);
        assert!((h.log_density([1.5, 10.0]) + 0.5).abs() < 1e-15);
    }
}
