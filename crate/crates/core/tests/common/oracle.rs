//! Dense proposal-density oracle shared by the sampler tests and the
//! acceptance suite.

use infdim_core::gaussian::DiagonalScaling;
use infdim_core::models::TargetModel;
use infdim_core::rng::standard_normals;
use infdim_core::samplers::{log_ratio, ChainState, KernelConfig, KernelKind};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

/// Proposal densities written directly from the kernel definitions, with
/// dense matrices and none of the library's algebraic rearrangements.
pub struct Oracle<'a> {
    pub model: &'a dyn TargetModel,
    pub s: DMatrix<f64>,
    pub sigma: Vec<f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(model: &'a dyn TargetModel) -> Self {
        let prior = model.prior();
        let p = prior.basis().matrix();
        let sigma = prior.eigenvalues().to_vec();
        let s = DMatrix::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)] * sigma[j].sqrt());
        Self { model, s, sigma }
    }

    pub fn nodal(&self, z: &[f64]) -> Vec<f64> {
        (&self.s * DVector::from_column_slice(z)).as_slice().to_vec()
    }

    pub fn log_target(&self, z: &[f64]) -> f64 {
        -self.model.potential(&self.nodal(z)).unwrap() - 0.5 * z.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn grad(&self, z: &[f64]) -> DVector<f64> {
        let g = self.model.grad_potential(&self.nodal(z)).unwrap();
        self.s.tr_mul(&DVector::from_vec(g))
    }

    /// Root δ ∈ (0, 2] of β²(2 + δ)² = 8δ.
    pub fn delta(beta: f64) -> f64 {
        let b2 = beta * beta;
        let b = 4.0 * b2 - 8.0;
        let disc = (b * b - 16.0 * b2 * b2).max(0.0);
        (-b - disc.sqrt()) / (2.0 * b2)
    }

    pub fn proposal(&self, cfg: &KernelConfig, z: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = z.len();
        let zv = DVector::from_column_slice(z);
        let b = cfg.beta;
        let rho = (1.0 - b * b).sqrt();
        let c = 1.0 - rho;
        let d = DVector::from_column_slice(cfg.scaling.as_slice());
        let m = DVector::from_column_slice(&cfg.mean);
        let diag = |v: DVector<f64>| DMatrix::from_diagonal(&v);
        match cfg.kind {
            KernelKind::Pcn => (&zv * rho, DMatrix::identity(n, n) * (b * b)),
            KernelKind::PcnAm0 => (&zv * (1.0 - c), diag(&d * (b * b))),
            KernelKind::PcnAm => (&zv * (1.0 - c) + &m * c, diag(&d * (b * b))),
            KernelKind::Pcnl => (&zv * rho - self.grad(z) * c, DMatrix::identity(n, n) * (b * b)),
            KernelKind::PcnlAm => {
                let mz = &zv - d.component_mul(&(self.grad(z) + &zv));
                (&zv * (1.0 - c) + mz * c, diag(&d * (b * b)))
            }
            KernelKind::PcnAp | KernelKind::PcnlAp => {
                let delta = Self::delta(b);
                let bi: Vec<f64> = d.iter().map(|di| (8.0 * delta * di).sqrt() / (2.0 + delta * di)).collect();
                let ci: Vec<f64> = bi.iter().map(|b| 1.0 - (1.0 - b * b).sqrt()).collect();
                let drift = if cfg.kind == KernelKind::PcnAp { m.clone() } else { -self.grad(z) };
                let mean = DVector::from_fn(n, |i, _| (1.0 - ci[i]) * z[i] + ci[i] * drift[i]);
                (mean, diag(DVector::from_fn(n, |i, _| bi[i] * bi[i])))
            }
            KernelKind::Mala => {
                let mean = &zv - (self.grad(z) + &zv).component_mul(&d) * (0.5 * b * b);
                (mean, diag(&d * (b * b)))
            }
            KernelKind::Mgrad => {
                // Nodal form: mean (2/δ)A(u − (δ/2)∇Φ(u)), covariance (2/δ)A² + A,
                // A = (C⁻¹ + (2/δ)I)⁻¹; mapped to whitened coordinates.
                let dl = cfg.delta;
                let g = self.grad(z);
                let a: Vec<f64> = self.sigma.iter().map(|s| 1.0 / (1.0 / s + 2.0 / dl)).collect();
                let mean = DVector::from_fn(n, |i, _| (2.0 / dl) * a[i] * z[i] - a[i] / self.sigma[i] * g[i]);
                let var = DVector::from_fn(n, |i, _| ((2.0 / dl) * a[i] * a[i] + a[i]) / self.sigma[i]);
                (mean, diag(var))
            }
            KernelKind::PcnlHm => {
                let h = self.model.hessian_potential(&self.nodal(z)).unwrap();
                let prec = self.s.transpose() * DMatrix::from_diagonal(&DVector::from_vec(h)) * &self.s
                    + DMatrix::identity(n, n);
                let cov = prec.clone().try_inverse().unwrap();
                let newton = &zv - &cov * (self.grad(z) + &zv);
                (&zv * (1.0 - c) + newton * c, cov * (b * b))
            }
        }
    }

    pub fn log_q(&self, cfg: &KernelConfig, from: &[f64], to: &[f64]) -> f64 {
        let (mean, cov) = self.proposal(cfg, from);
        gaussian_logpdf(&DVector::from_column_slice(to), &mean, &cov)
    }

    pub fn residual(&self, cfg: &KernelConfig, u: &ChainState, v: &ChainState) -> f64 {
        let j = log_ratio(cfg, self.model, u, v).unwrap();
        self.log_target(&u.z) + self.log_q(cfg, &u.z, &v.z) + j - self.log_target(&v.z) - self.log_q(cfg, &v.z, &u.z)
    }
}

pub fn gaussian_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let chol = Cholesky::new(cov.clone()).unwrap();
    let diff = x - mean;
    let quad = diff.dot(&chol.solve(&diff));
    let logdet: f64 = chol.l().diagonal().iter().map(|l| 2.0 * l.ln()).sum();
    -0.5 * quad - 0.5 * logdet
}

pub fn random_config<R: Rng>(kind: KernelKind, dim: usize, rng: &mut R) -> KernelConfig {
    let beta = rng.random_range(0.2..0.95);
    let d: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
    let m: Vec<f64> = standard_normals(rng, dim).iter().map(|x| 0.5 * x).collect();
    let mut cfg = KernelConfig::new(kind, beta, dim).with_delta(rng.random_range(0.3..3.0));
    if kind.uses_scaling() {
        cfg = cfg.with_scaling(DiagonalScaling::new(d).unwrap());
    }
    if kind.uses_mean() {
        cfg = cfg.with_mean(m);
    }
    cfg
}
