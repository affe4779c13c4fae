//! Reference targets with closed-form posteriors.

use super::{check_input, Capabilities, GrowthBound, TargetModel};
use crate::error::{check_len, Error, Result};
use crate::gaussian::SpectralCovariance;

/// `Φ ≡ 0`: the posterior is the prior.
#[derive(Debug, Clone)]
pub struct PriorOnlyModel {
    prior: SpectralCovariance,
}

impl PriorOnlyModel {
    pub fn new(prior: SpectralCovariance) -> Self {
        Self { prior }
    }
}

impl TargetModel for PriorOnlyModel {
    fn prior(&self) -> &SpectralCovariance {
        &self.prior
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_gradient: true, has_hessian: true }
    }

    fn potential(&self, u: &[f64]) -> Result<f64> {
        check_input(u, self.nodal_dim(), "prior potential")?;
        Ok(0.0)
    }

    fn grad_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.nodal_dim(), "prior gradient")?;
        Ok(vec![0.0; u.len()])
    }

    fn hessian_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.nodal_dim(), "prior hessian")?;
        Ok(vec![0.0; u.len()])
    }

    fn growth_bound(&self) -> Option<GrowthBound> {
        Some(GrowthBound { k: 0.0, p: 0.0 })
    }
}

/// Direct observation of every nodal value: `Φ(u) = ½ ‖y − u‖² / s²`.
#[derive(Debug, Clone)]
pub struct GaussianObservationModel {
    prior: SpectralCovariance,
    y: Vec<f64>,
    noise_var: f64,
}

impl GaussianObservationModel {
    pub fn new(prior: SpectralCovariance, y: Vec<f64>, noise_var: f64) -> Result<Self> {
        check_len(prior.nodal_dim(), y.len())?;
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(Error::InvalidParameter("noise variance must be positive".into()));
        }
        Ok(Self { prior, y, noise_var })
    }
}

impl TargetModel for GaussianObservationModel {
    fn prior(&self) -> &SpectralCovariance {
        &self.prior
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_gradient: true, has_hessian: true }
    }

    fn potential(&self, u: &[f64]) -> Result<f64> {
        check_input(u, self.y.len(), "gaussian potential")?;
        Ok(0.5 * u.iter().zip(&self.y).map(|(u, y)| (y - u) * (y - u)).sum::<f64>() / self.noise_var)
    }

    fn grad_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.y.len(), "gaussian gradient")?;
        Ok(u.iter().zip(&self.y).map(|(u, y)| (u - y) / self.noise_var).collect())
    }

    fn hessian_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_input(u, self.y.len(), "gaussian hessian")?;
        Ok(vec![1.0 / self.noise_var; u.len()])
    }

    fn growth_bound(&self) -> Option<GrowthBound> {
        let y2: f64 = self.y.iter().map(|y| y * y).sum();
        Some(GrowthBound { k: (y2 + 1.0) / self.noise_var, p: 2.0 })
    }
}
