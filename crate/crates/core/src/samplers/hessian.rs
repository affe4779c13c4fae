//! Curvature-adapted Langevin kernel.
//!
//! With `P(z) = I + Sᵀ H(Sz) S` (the local posterior precision in whitened
//! coordinates, `H = +∇∇Φ`) the proposal is
//! `z_v ~ N(z − c P⁻¹(g + z), β² P⁻¹)`, i.e. `(1 − c)z + c m(z)` with the
//! Newton point `m(z) = z − P⁻¹(g + z)`. Because `P` depends on the state the
//! proposal is not reversible with respect to any fixed Gaussian, so the
//! ratio is taken from the proposal densities, including the
//! `½ log det P(v) − ½ log det P(u)` term.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{c_beta, log_target, ChainState, KernelConfig};
use crate::error::Result;
use crate::models::TargetModel;

struct Local {
    chol: Cholesky<f64, Dyn>,
    mean: DVector<f64>,
}

impl Local {
    fn at(cfg: &KernelConfig, model: &dyn TargetModel, state: &ChainState) -> Result<Option<Self>> {
        let h = model.hessian_potential(&state.u)?;
        if h.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        let s = model.prior().sqrt_matrix();
        let mut hs = s.clone();
        for (mut row, hk) in hs.row_iter_mut().zip(&h) {
            row *= *hk;
        }
        let p = s.tr_mul(&hs) + DMatrix::identity(s.ncols(), s.ncols());
        let Some(chol) = Cholesky::new(p) else {
            return Ok(None);
        };
        let g = state.grad_z.as_deref().expect("curvature kernel evaluates gradients");
        let z = DVector::from_column_slice(&state.z);
        let newton = chol.solve(&(DVector::from_column_slice(g) + &z));
        let mean = z - newton * c_beta(cfg.beta);
        Ok(Some(Self { chol, mean }))
    }

    /// `log N(x; mean, β² P⁻¹)` up to the `2π` constant.
    fn logpdf(&self, x: &[f64], beta: f64) -> f64 {
        let l = self.chol.l();
        let diff = DVector::from_column_slice(x) - &self.mean;
        let w = l.tr_mul(&diff);
        let logdet_half: f64 = (0..diff.len()).map(|i| l[(i, i)].ln()).sum();
        -0.5 * w.norm_squared() / (beta * beta) + logdet_half - diff.len() as f64 * beta.ln()
    }
}

pub(super) fn propose(
    cfg: &KernelConfig,
    model: &dyn TargetModel,
    state: &ChainState,
    xi: &[f64],
) -> Result<Option<Vec<f64>>> {
    let Some(local) = Local::at(cfg, model, state)? else {
        return Ok(None);
    };
    let l = local.chol.l();
    let noise =
        l.tr_solve_lower_triangular(&DVector::from_column_slice(xi)).expect("Cholesky factor has a positive diagonal");
    Ok(Some((local.mean + noise * cfg.beta).as_slice().to_vec()))
}

pub(super) fn log_ratio(
    cfg: &KernelConfig,
    model: &dyn TargetModel,
    u: &ChainState,
    v: &ChainState,
) -> Result<Option<f64>> {
    let (Some(lu), Some(lv)) = (Local::at(cfg, model, u)?, Local::at(cfg, model, v)?) else {
        return Ok(None);
    };
    let back = lv.logpdf(&u.z, cfg.beta);
    let fwd = lu.logpdf(&v.z, cfg.beta);
    Ok(Some(log_target(v) - log_target(u) + back - fwd))
}
