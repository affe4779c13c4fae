//! Target posteriors `dμ₁/dμ₀(u) ∝ exp(−Φ(u))` in nodal coordinates.
//!
//! Sign convention: `hessian_potential` returns `+∇∇Φ`, the positive
//! semidefinite curvature of the negative log-likelihood, so that
//! `C⁻¹ + H` is a precision.

mod lattice;
mod lgcp;
mod logistic;
mod quadrature;
mod simple;

pub use lattice::{lattice_prior, simulate_binomial, BinomialLatticeModel, BinomialSynthesis, LatticePriorConfig};
pub use lgcp::{lgcp_prior, simulate_lgcp, HyperPrior, LgcpConfig, LgcpModel};
pub use logistic::{
    classifier_prior, simulate_classifier, ClassifierData, ClassifierSynthesis, LogisticClassifierModel,
    LogisticPriorConfig,
};
pub use quadrature::{quadrature_posterior_moments, PosteriorMoments, TensorQuadrature};
pub use simple::{GaussianObservationModel, PriorOnlyModel};

use crate::error::{check_len, Error, Result};
use crate::gaussian::SpectralCovariance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub has_gradient: bool,
    pub has_hessian: bool,
}

/// Declared polynomial growth `Φ(u) ≤ k (1 + ‖u‖^p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub k: f64,
    pub p: f64,
}

pub trait TargetModel: Send + Sync {
    fn prior(&self) -> &SpectralCovariance;

    fn capabilities(&self) -> Capabilities;

    /// `Φ(u) ≥ 0`; may be `+∞` on overflow, never NaN for finite input.
    fn potential(&self, u: &[f64]) -> Result<f64>;

    fn grad_potential(&self, _u: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("gradient of the potential"))
    }

    /// Diagonal of `+∇∇Φ(u)`.
    fn hessian_potential(&self, _u: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("hessian of the potential"))
    }

    /// `None` when no polynomial bound exists (the Poisson potential grows
    /// exponentially).
    fn growth_bound(&self) -> Option<GrowthBound> {
        None
    }

    fn dim(&self) -> usize {
        self.prior().dim()
    }

    fn nodal_dim(&self) -> usize {
        self.prior().nodal_dim()
    }
}

/// Lattice observations as stored in `row,col,count[,trials]` files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeCell {
    pub row: usize,
    pub col: usize,
    pub count: u32,
    pub trials: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LatticeData {
    pub cells: Vec<LatticeCell>,
}

impl LatticeData {
    pub(crate) fn flat_indices(&self, n1: usize, n2: usize) -> Result<Vec<usize>> {
        let mut seen = vec![false; n1 * n2];
        let mut out = Vec::with_capacity(self.cells.len());
        for c in &self.cells {
            if c.row >= n1 || c.col >= n2 {
                return Err(Error::InvalidParameter(format!("cell ({}, {}) outside the {n1}x{n2} grid", c.row, c.col)));
            }
            let k = c.row * n2 + c.col;
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidParameter(format!("cell ({}, {}) listed twice", c.row, c.col)));
            }
            out.push(k);
        }
        Ok(out)
    }
}

pub(crate) fn check_input(u: &[f64], n: usize, what: &'static str) -> Result<()> {
    check_len(n, u.len())?;
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eˣ)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(-40.0) - (-40f64).exp() / (1.0 + (-40f64).exp())).abs() < 1e-30);
    }
}
