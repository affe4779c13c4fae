//! Gradient-informed kernels. `g` below is always the whitened gradient
//! `Sᵀ∇Φ(Sz)` cached on the state.

use super::{
    ap_coefficients, c_beta, delta_from_beta, diag_gaussian_logpdf, log_target, ChainState, KernelConfig, KernelKind,
};
use crate::error::Result;
use crate::models::TargetModel;

fn grad(state: &ChainState) -> &[f64] {
    state.grad_z.as_deref().expect("gradient kernels evaluate states with gradients")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// pCNL: `ρz − c g + βξ`. pCNL_AM: `ρz + c m(z) + βΛ^{1/2}ξ` with
/// `m(z) = z − Λ(g + z)`, arranged so that `Λ = I` reproduces pCNL exactly.
pub(super) fn propose_am(cfg: &KernelConfig, state: &ChainState, xi: &[f64]) -> Vec<f64> {
    let beta = cfg.beta;
    let rho = (1.0 - beta * beta).max(0.0).sqrt();
    let c = c_beta(beta);
    let (z, g) = (&state.z, grad(state));
    if cfg.kind == KernelKind::Pcnl {
        return (0..z.len()).map(|i| rho * z[i] - c * g[i] + beta * xi[i]).collect();
    }
    let d = cfg.scaling.as_slice();
    (0..z.len()).map(|i| rho * z[i] - c * d[i] * g[i] + c * (1.0 - d[i]) * z[i] + beta * d[i].sqrt() * xi[i]).collect()
}

/// `Φ(u) − Φ(v) + δ/4 (‖g_u‖² − ‖g_v‖²) + ½⟨v − u, g_u + g_v⟩ + δ/4 ⟨v + u, g_u − g_v⟩`.
pub(super) fn log_ratio_pcnl(cfg: &KernelConfig, u: &ChainState, v: &ChainState) -> f64 {
    let delta = delta_from_beta(cfg.beta);
    let (gu, gv) = (grad(u), grad(v));
    let mut j = u.phi - v.phi + 0.25 * delta * (dot(gu, gu) - dot(gv, gv));
    for i in 0..gu.len() {
        j += 0.5 * (v.z[i] - u.z[i]) * (gu[i] + gv[i]);
        j += 0.25 * delta * (v.z[i] + u.z[i]) * (gu[i] - gv[i]);
    }
    j
}

/// Modified-potential form with `⟨a, b⟩_K = aᵀΛ⁻¹b`:
/// `Φ̃(u) − Φ̃(v) − (c/β²)⟨m_u, v − ρu − ½c m_u⟩_K + (c/β²)⟨m_v, u − ρv − ½c m_v⟩_K`.
pub(super) fn log_ratio_am(cfg: &KernelConfig, u: &ChainState, v: &ChainState) -> Result<f64> {
    let beta = cfg.beta;
    let rho = (1.0 - beta * beta).max(0.0).sqrt();
    let c = c_beta(beta);
    // c / β² = 1 / (1 + ρ)
    let k = 1.0 / (1.0 + rho);
    let d = cfg.scaling.as_slice();
    let (gu, gv) = (grad(u), grad(v));
    let mut j = u.phi - v.phi;
    for i in 0..d.len() {
        let (a, b) = (u.z[i], v.z[i]);
        let mu = (1.0 - d[i]) * a - d[i] * gu[i];
        let mv = (1.0 - d[i]) * b - d[i] * gv[i];
        j += 0.5 * (1.0 / d[i] - 1.0) * (b * b - a * a);
        j -= k * mu * (b - rho * a - 0.5 * c * mu) / d[i];
        j += k * mv * (a - rho * b - 0.5 * c * mv) / d[i];
    }
    Ok(j)
}

pub(super) fn propose_ap(cfg: &KernelConfig, state: &ChainState, xi: &[f64]) -> Vec<f64> {
    let delta = delta_from_beta(cfg.beta);
    let d = cfg.scaling.as_slice();
    let (z, g) = (&state.z, grad(state));
    (0..z.len())
        .map(|i| {
            let (b, c) = ap_coefficients(delta, d[i]);
            (1.0 - c) * z[i] - c * g[i] + b * xi[i]
        })
        .collect()
}

/// Coordinate-wise pCNL ratio with weights `β_i⁻²`.
pub(super) fn log_ratio_ap(cfg: &KernelConfig, u: &ChainState, v: &ChainState) -> f64 {
    let delta = delta_from_beta(cfg.beta);
    let d = cfg.scaling.as_slice();
    let (gu, gv) = (grad(u), grad(v));
    let mut j = u.phi - v.phi;
    for i in 0..d.len() {
        let (_, c) = ap_coefficients(delta, d[i]);
        let rho = 1.0 - c;
        // c/β² = 1/(2 − c) and c²/(2β²) = c/(2(2 − c)).
        let k = 1.0 / (2.0 - c);
        j += k * (gu[i] * (v.z[i] - rho * u.z[i]) - gv[i] * (u.z[i] - rho * v.z[i]));
        j += 0.5 * c * k * (gu[i] * gu[i] - gv[i] * gv[i]);
    }
    j
}

fn mala_mean<'a>(cfg: &'a KernelConfig, s: &'a ChainState) -> impl Iterator<Item = f64> + 'a {
    let h = 0.5 * cfg.beta * cfg.beta;
    let g = grad(s);
    s.z.iter().zip(g).zip(cfg.scaling.as_slice()).map(move |((z, g), d)| z - h * d * (g + z))
}

fn mala_var(cfg: &KernelConfig) -> impl Iterator<Item = f64> + '_ {
    let b2 = cfg.beta * cfg.beta;
    cfg.scaling.as_slice().iter().map(move |d| b2 * d)
}

pub(super) fn propose_mala(cfg: &KernelConfig, state: &ChainState, xi: &[f64]) -> Vec<f64> {
    mala_mean(cfg, state).zip(mala_var(cfg)).zip(xi).map(|((m, v), x)| m + v.sqrt() * x).collect()
}

pub(super) fn log_ratio_mala(cfg: &KernelConfig, u: &ChainState, v: &ChainState) -> f64 {
    let back = diag_gaussian_logpdf(&u.z, mala_mean(cfg, v), mala_var(cfg));
    let fwd = diag_gaussian_logpdf(&v.z, mala_mean(cfg, u), mala_var(cfg));
    log_target(v) - log_target(u) + back - fwd
}

/// `(r, var)` for prior eigenvalue `σ`: with `a = (σ⁻¹ + 2/δ)⁻¹` the whitened
/// proposal is `N((1 − r) z − r g, var)`, `r = a/σ`, `var = ((2/δ)a² + a)/σ`.
pub fn mgrad_coefficients(sigma: f64, delta: f64) -> (f64, f64) {
    let r = 1.0 / (1.0 + 2.0 * sigma / delta);
    (r, r * (2.0 - r))
}

fn mgrad_params<'a>(cfg: &'a KernelConfig, model: &'a dyn TargetModel) -> impl Iterator<Item = (f64, f64)> + 'a {
    model.prior().eigenvalues().iter().map(move |&s| mgrad_coefficients(s, cfg.delta))
}

fn mgrad_mean<'a>(
    cfg: &'a KernelConfig,
    model: &'a dyn TargetModel,
    s: &'a ChainState,
) -> impl Iterator<Item = f64> + 'a {
    mgrad_params(cfg, model).zip(s.z.iter().zip(grad(s))).map(|((r, _), (z, g))| (1.0 - r) * z - r * g)
}

pub(super) fn propose_mgrad(cfg: &KernelConfig, model: &dyn TargetModel, state: &ChainState, xi: &[f64]) -> Vec<f64> {
    mgrad_mean(cfg, model, state)
        .zip(mgrad_params(cfg, model))
        .zip(xi)
        .map(|((m, (_, v)), x)| m + v.sqrt() * x)
        .collect()
}

pub(super) fn log_ratio_mgrad(cfg: &KernelConfig, model: &dyn TargetModel, u: &ChainState, v: &ChainState) -> f64 {
    let var = || mgrad_params(cfg, model).map(|(_, v)| v);
    let back = diag_gaussian_logpdf(&u.z, mgrad_mean(cfg, model, v), var());
    let fwd = diag_gaussian_logpdf(&v.z, mgrad_mean(cfg, model, u), var());
    log_target(v) - log_target(u) + back - fwd
}
