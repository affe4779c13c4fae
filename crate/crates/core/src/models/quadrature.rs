//! Brute-force posterior moments for targets of dimension at most three.
//!
//! The grid lives in whitened coefficients, `z ∈ [−8, 8]^dim` (eight prior
//! standard deviations along every eigen-direction), with trapezoid weights
//! times the unnormalised density `exp(−Φ(Sz) − ½‖z‖²)`.

use nalgebra::DMatrix;

use super::TargetModel;
use crate::error::{Error, Result};

const HALF_WIDTH: f64 = 8.0;
pub const MAX_QUADRATURE_DIM: usize = 3;
pub const MIN_POINTS_PER_DIM: usize = 50;

#[derive(Debug, Clone)]
pub struct PosteriorMoments {
    pub mean_z: Vec<f64>,
    pub cov_z: DMatrix<f64>,
    pub mean_u: Vec<f64>,
    pub cov_u: DMatrix<f64>,
}

/// Normalised quadrature rule against the posterior.
pub struct TensorQuadrature<'a> {
    model: &'a dyn TargetModel,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> TensorQuadrature<'a> {
    pub fn new(model: &'a dyn TargetModel, points_per_dim: usize) -> Result<Self> {
        let dim = model.dim();
        if dim > MAX_QUADRATURE_DIM {
            return Err(Error::Unsupported("quadrature beyond three dimensions"));
        }
        if points_per_dim < MIN_POINTS_PER_DIM {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least {MIN_POINTS_PER_DIM} points per dimension"
            )));
        }
        let h = 2.0 * HALF_WIDTH / (points_per_dim - 1) as f64;
        let nodes: Vec<f64> = (0..points_per_dim).map(|i| -HALF_WIDTH + i as f64 * h).collect();
        let total = points_per_dim.pow(dim as u32);
        let mut logw = Vec::with_capacity(total);
        let mut z = vec![0.0; dim];
        for flat in 0..total {
            let mut edge = 0;
            let mut rem = flat;
            for zk in z.iter_mut() {
                let i = rem % points_per_dim;
                rem /= points_per_dim;
                *zk = nodes[i];
                if i == 0 || i == points_per_dim - 1 {
                    edge += 1;
                }
            }
            let u = model.prior().from_coefficients(&z)?;
            let phi = model.potential(&u)?;
            let norm: f64 = z.iter().map(|v| v * v).sum();
            logw.push(-phi - 0.5 * norm - edge as f64 * std::f64::consts::LN_2);
        }
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Ok(Self { model, nodes, weights })
    }

    fn point(&self, flat: usize, z: &mut [f64]) {
        let n = self.nodes.len();
        let mut rem = flat;
        for zk in z.iter_mut() {
            *zk = self.nodes[rem % n];
            rem /= n;
        }
    }

    /// `E[f(z, u)]` under the posterior, componentwise.
    pub fn expectation<F>(&self, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64], &[f64]) -> Result<Vec<f64>>,
    {
        let mut z = vec![0.0; self.model.dim()];
        let mut acc: Vec<f64> = Vec::new();
        for (flat, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            self.point(flat, &mut z);
            let u = self.model.prior().from_coefficients(&z)?;
            let v = f(&z, &u)?;
            if acc.is_empty() {
                acc = vec![0.0; v.len()];
            }
            for (a, v) in acc.iter_mut().zip(v) {
                *a += w * v;
            }
        }
        Ok(acc)
    }

    pub fn moments(&self) -> Result<PosteriorMoments> {
        let d = self.model.dim();
        let n = self.model.nodal_dim();
        let first = self.expectation(|z, u| Ok(z.iter().chain(u).copied().collect()))?;
        let (mean_z, mean_u) = (first[..d].to_vec(), first[d..].to_vec());
        let second = self.expectation(|z, u| {
            let mut out = Vec::with_capacity(d * d + n * n);
            for a in z {
                out.extend(z.iter().map(|b| a * b));
            }
            for a in u {
                out.extend(u.iter().map(|b| a * b));
            }
            Ok(out)
        })?;
        let cov_z = DMatrix::from_fn(d, d, |i, j| second[i * d + j] - mean_z[i] * mean_z[j]);
        let cov_u = DMatrix::from_fn(n, n, |i, j| second[d * d + i * n + j] - mean_u[i] * mean_u[j]);
        Ok(PosteriorMoments { mean_z, cov_z, mean_u, cov_u })
    }
}

pub fn quadrature_posterior_moments(model: &dyn TargetModel, points_per_dim: usize) -> Result<PosteriorMoments> {
    TensorQuadrature::new(model, points_per_dim)?.moments()
}
