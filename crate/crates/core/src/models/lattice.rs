//! Binomial observations of a Matérn-type field on a regular grid.
//!
//! The prior covariance is `σ² (κ² − Δ_h)^{−α}` with `Δ_h` the 5-point
//! Neumann Laplacian (unit spacing), diagonal in the cosine basis.
//! `Φ(u) = Σ_obs [n_i log(1 + e^{u_i}) − y_i u_i] ≥ 0`; the binomial
//! coefficients are dropped.

use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{check_input, sigmoid, softplus, Capabilities, GrowthBound, LatticeCell, LatticeData, TargetModel};
use crate::error::{Error, Result};
use crate::gaussian::{sample_prior, BasisMap, CosineBasis, GaussianMeasure, SpectralCovariance};
use crate::rng::chain_rng;

fn default_exponent() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticePriorConfig {
    pub n1: usize,
    pub n2: usize,
    pub kappa: f64,
    pub sigma: f64,
    /// Exponent α of the precision `σ⁻² (κ² − Δ_h)^α`.
    #[serde(default = "default_exponent")]
    pub precision_exponent: f64,
}

impl LatticePriorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidParameter("grid dimensions must be positive".into()));
        }
        for (name, v) in [("kappa", self.kappa), ("sigma", self.sigma), ("precision_exponent", self.precision_exponent)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

pub fn lattice_prior(cfg: &LatticePriorConfig) -> Result<SpectralCovariance> {
    cfg.validate()?;
    let basis = CosineBasis::new(cfg.n1, cfg.n2);
    let k2 = cfg.kappa * cfg.kappa;
    let s2 = cfg.sigma * cfg.sigma;
    let eig = basis.laplacian_eigenvalues().iter().map(|l| s2 / (k2 + l).powf(cfg.precision_exponent)).collect();
    SpectralCovariance::new(eig, BasisMap::Cosine(basis))
}

#[derive(Debug, Clone)]
pub struct BinomialLatticeModel {
    prior: SpectralCovariance,
    observed: Vec<usize>,
    trials: Vec<f64>,
    successes: Vec<f64>,
}

impl BinomialLatticeModel {
    pub fn new(cfg: &LatticePriorConfig, data: &LatticeData) -> Result<Self> {
        let prior = lattice_prior(cfg)?;
        let observed = data.flat_indices(cfg.n1, cfg.n2)?;
        let mut trials = Vec::with_capacity(observed.len());
        let mut successes = Vec::with_capacity(observed.len());
        for c in &data.cells {
            let n = c
                .trials
                .ok_or_else(|| Error::InvalidParameter(format!("cell ({}, {}) has no trial count", c.row, c.col)))?;
            if c.count > n {
                return Err(Error::InvalidParameter(format!(
                    "cell ({}, {}) has {} successes out of {n} trials",
                    c.row, c.col, c.count
                )));
            }
            trials.push(n as f64);
            successes.push(c.count as f64);
        }
        Ok(Self { prior, observed, trials, successes })
    }

    pub fn observed_cells(&self) -> &[usize] {
        &self.observed
    }
}

impl TargetModel for BinomialLatticeModel {
    fn prior(&self) -> &SpectralCovariance {
        &self.prior
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_gradient: true, has_hessian: true }
    }

    fn potential(&self, u: &[f64]) -> Result<f64> {
        check_input(u, self.nodal_dim(), "binomial potential")?;
        Ok(self
            .observed
            .iter()
            .zip(self.trials.iter().zip(&self.successes))
            .map(|(&k, (&n, &y))| n * softplus(u[k]) - y * u[k])
            .sum())
    }

    fn grad_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.nodal_dim(), "binomial gradient")?;
        let mut g = vec![0.0; u.len()];
        for (&k, (&n, &y)) in self.observed.iter().zip(self.trials.iter().zip(&self.successes)) {
            g[k] = n * sigmoid(u[k]) - y;
        }
        Ok(g)
    }

    fn hessian_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.nodal_dim(), "binomial hessian")?;
        let mut h = vec![0.0; u.len()];
        for (&k, &n) in self.observed.iter().zip(&self.trials) {
            let s = sigmoid(u[k]);
            h[k] = n * s * (1.0 - s);
        }
        Ok(h)
    }

    fn growth_bound(&self) -> Option<GrowthBound> {
        // n softplus(u) − yu ≤ n log 2 + 2n|u|.
        let total: f64 = self.trials.iter().sum();
        let max_n = self.trials.iter().copied().fold(0.0, f64::max);
        let m = self.observed.len() as f64;
        Some(GrowthBound { k: (total * std::f64::consts::LN_2).max(2.0 * max_n * m.sqrt()), p: 1.0 })
    }
}

fn default_trials_mean() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinomialSynthesis {
    /// Fraction of cells observed, chosen uniformly without replacement.
    pub obs_fraction: f64,
    /// Mean of the Poisson draw for `n_i − 1`.
    #[serde(default = "default_trials_mean")]
    pub trials_mean: f64,
}

impl BinomialSynthesis {
    pub fn new(obs_fraction: f64) -> Self {
        Self { obs_fraction, trials_mean: default_trials_mean() }
    }
}

pub fn simulate_binomial(
    cfg: &LatticePriorConfig,
    synth: &BinomialSynthesis,
    true_field_seed: u64,
    obs_seed: u64,
) -> Result<(LatticeData, Vec<f64>)> {
    if !(synth.obs_fraction > 0.0 && synth.obs_fraction <= 1.0) {
        return Err(Error::InvalidParameter("obs_fraction must lie in (0, 1]".into()));
    }
    if !(synth.trials_mean.is_finite() && synth.trials_mean >= 0.0) {
        return Err(Error::InvalidParameter("trials_mean must be nonnegative".into()));
    }
    let prior = std::sync::Arc::new(lattice_prior(cfg)?);
    let z = sample_prior(&GaussianMeasure::prior(prior.clone()), &mut chain_rng(true_field_seed));
    let field = prior.from_coefficients(&z)?;

    let mut rng = chain_rng(obs_seed);
    let n_cells = cfg.n1 * cfg.n2;
    let n_obs = ((synth.obs_fraction * n_cells as f64).round() as usize).clamp(1, n_cells);
    let mut cells: Vec<usize> = rand::seq::index::sample(&mut rng, n_cells, n_obs).into_vec();
    cells.sort_unstable();
    let poisson = (synth.trials_mean > 0.0)
        .then(|| Poisson::new(synth.trials_mean).map_err(|e| Error::InvalidParameter(e.to_string())))
        .transpose()?;
    let mut out = Vec::with_capacity(n_obs);
    for k in cells {
        let extra = poisson.as_ref().map_or(0.0, |p| p.sample(&mut rng));
        let n = 1 + extra as u32;
        let y = Binomial::new(n as u64, sigmoid(field[k]))
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(&mut rng) as u32;
        out.push(LatticeCell { row: k / cfg.n2, col: k % cfg.n2, count: y, trials: Some(n) });
    }
    Ok((LatticeData { cells: out }, field))
}
