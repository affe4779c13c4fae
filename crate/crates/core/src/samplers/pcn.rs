//! Gradient-free Crank–Nicolson kernels.

use super::{ap_coefficients, c_beta, delta_from_beta, ChainState, KernelConfig};
use crate::error::Result;
use crate::gaussian::DiagonalScaling;

/// `z_v = ρ z + c m + β Λ^{1/2} ξ` with `ρ = √(1−β²)`; `m = 0` when absent.
/// For plain pCN the scaling is ignored.
pub(super) fn propose_am(
    beta: f64,
    scaling: &DiagonalScaling,
    mean: Option<&[f64]>,
    z: &[f64],
    xi: &[f64],
    plain: bool,
) -> Vec<f64> {
    let rho = (1.0 - beta * beta).max(0.0).sqrt();
    if plain {
        return z.iter().zip(xi).map(|(z, x)| rho * z + beta * x).collect();
    }
    let c = c_beta(beta);
    let d = scaling.as_slice();
    (0..z.len())
        .map(|i| {
            let drift = mean.map_or(0.0, |m| c * m[i]);
            rho * z[i] + drift + beta * d[i].sqrt() * xi[i]
        })
        .collect()
}

/// `Φ(u) − Φ(v) + ½⟨v, (Λ⁻¹ − I)v⟩ − ½⟨u, (Λ⁻¹ − I)u⟩ − ⟨v − u, m⟩_{Λ⁻¹}`.
pub(super) fn log_ratio_am(cfg: &KernelConfig, u: &ChainState, v: &ChainState) -> Result<f64> {
    let d = cfg.scaling.as_slice();
    let mean = cfg.effective_mean();
    let mut j = u.phi - v.phi;
    for i in 0..d.len() {
        let (a, b) = (u.z[i], v.z[i]);
        j += 0.5 * (1.0 / d[i] - 1.0) * (b * b - a * a);
        if let Some(m) = mean {
            j -= (b - a) * m[i] / d[i];
        }
    }
    Ok(j)
}

/// Per-coordinate AR(1) around `m̂` with `β_i` from `δ d_i`.
pub(super) fn propose_ap(cfg: &KernelConfig, z: &[f64], xi: &[f64]) -> Vec<f64> {
    let delta = delta_from_beta(cfg.beta);
    let d = cfg.scaling.as_slice();
    (0..z.len())
        .map(|i| {
            let (b, c) = ap_coefficients(delta, d[i]);
            (1.0 - c) * z[i] + c * cfg.mean[i] + b * xi[i]
        })
        .collect()
}

/// The AR(1) leaves `N(m̂, I)` invariant, so `J = Φ(u) − Φ(v) − ⟨v − u, m̂⟩`.
pub(super) fn log_ratio_ap(cfg: &KernelConfig, u: &ChainState, v: &ChainState) -> f64 {
    let shift: f64 = (0..u.z.len()).map(|i| (v.z[i] - u.z[i]) * cfg.mean[i]).sum();
    u.phi - v.phi - shift
}
