//! Metropolis–Hastings kernels on whitened Karhunen–Loève coefficients.
//!
//! In coefficient space the prior is `N(0, I)`, the target density is
//! `π̃(z) ∝ exp(−Φ(Sz) − ½‖z‖²)` and the gradient seen by the kernels is
//! `g(z) = Sᵀ∇Φ(Sz)`. Every kernel consumes exactly `dim` standard normals
//! followed by one uniform per step.

mod hessian;
mod langevin;
mod pcn;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::gaussian::DiagonalScaling;
use crate::models::TargetModel;
use crate::rng::standard_normals;

pub use langevin::mgrad_coefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Pcn,
    PcnAm0,
    PcnAm,
    Pcnl,
    PcnlAm,
    PcnAp,
    PcnlAp,
    PcnlHm,
    Mala,
    Mgrad,
}

impl KernelKind {
    pub const ALL: [KernelKind; 10] = [
        KernelKind::Pcn,
        KernelKind::PcnAm0,
        KernelKind::PcnAm,
        KernelKind::Pcnl,
        KernelKind::PcnlAm,
        KernelKind::PcnAp,
        KernelKind::PcnlAp,
        KernelKind::PcnlHm,
        KernelKind::Mala,
        KernelKind::Mgrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Pcn => "pcn",
            KernelKind::PcnAm0 => "pcn_am0",
            KernelKind::PcnAm => "pcn_am",
            KernelKind::Pcnl => "pcnl",
            KernelKind::PcnlAm => "pcnl_am",
            KernelKind::PcnAp => "pcn_ap",
            KernelKind::PcnlAp => "pcnl_ap",
            KernelKind::PcnlHm => "pcnl_hm",
            KernelKind::Mala => "mala",
            KernelKind::Mgrad => "mgrad",
        }
    }

    pub fn needs_gradient(self) -> bool {
        matches!(
            self,
            KernelKind::Pcnl
                | KernelKind::PcnlAm
                | KernelKind::PcnlAp
                | KernelKind::PcnlHm
                | KernelKind::Mala
                | KernelKind::Mgrad
        )
    }

    pub fn needs_hessian(self) -> bool {
        self == KernelKind::PcnlHm
    }

    /// Whether the kernel reads `KernelConfig::scaling`.
    pub fn uses_scaling(self) -> bool {
        matches!(
            self,
            KernelKind::PcnAm0
                | KernelKind::PcnAm
                | KernelKind::PcnlAm
                | KernelKind::PcnAp
                | KernelKind::PcnlAp
                | KernelKind::Mala
        )
    }

    /// Whether the kernel reads `KernelConfig::mean`.
    pub fn uses_mean(self) -> bool {
        matches!(self, KernelKind::PcnAm | KernelKind::PcnAp)
    }

    /// Step parameter is `δ` rather than `β`.
    pub fn tunes_delta(self) -> bool {
        self == KernelKind::Mgrad
    }

    /// 0.2 without gradient information, 0.5 with it.
    pub fn default_target_accept(self) -> f64 {
        if self.needs_gradient() {
            0.5
        } else {
            0.2
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown kernel `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// In `(0, 1]`.
    pub beta: f64,
    /// mGrad step; ignored by the other kernels.
    pub delta: f64,
    pub scaling: DiagonalScaling,
    pub mean: Vec<f64>,
}

impl KernelConfig {
    /// Unit scaling and zero mean.
    pub fn new(kind: KernelKind, beta: f64, dim: usize) -> Self {
        Self { kind, beta, delta: 1.0, scaling: DiagonalScaling::identity(dim), mean: vec![0.0; dim] }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_scaling(mut self, scaling: DiagonalScaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_mean(mut self, mean: Vec<f64>) -> Self {
        self.mean = mean;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta {} outside (0, 1]", self.beta)));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta {} must be positive", self.delta)));
        }
        check_len(dim, self.scaling.len())?;
        check_len(dim, self.mean.len())?;
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("kernel mean"));
        }
        Ok(())
    }

    /// Mean actually used by the kernel: zero for `pcn_am0`.
    pub(crate) fn effective_mean(&self) -> Option<&[f64]> {
        match self.kind {
            KernelKind::PcnAm | KernelKind::PcnAp => Some(&self.mean),
            _ => None,
        }
    }
}

/// `c_β = 1 − √(1 − β²)`, computed as `β² / (1 + √(1 − β²))`.
pub fn c_beta(beta: f64) -> f64 {
    let b2 = beta * beta;
    b2 / (1.0 + (1.0 - b2).max(0.0).sqrt())
}

/// The root `δ ∈ (0, 2]` of `β² = 8δ / (2 + δ)²`.
pub fn delta_from_beta(beta: f64) -> f64 {
    let c = c_beta(beta);
    2.0 * c / (2.0 - c)
}

pub fn beta_from_delta(delta: f64) -> f64 {
    (8.0 * delta).sqrt() / (2.0 + delta)
}

/// Per-coordinate `(β_i, c_i)` from `β_i² = 8δd_i / (2 + δd_i)²`.
pub fn ap_coefficients(delta: f64, d: f64) -> (f64, f64) {
    let x = delta * d;
    let beta = beta_from_delta(x).min(1.0);
    // 1 − |2 − x| / (2 + x), written without cancellation.
    let c = if x <= 2.0 { 2.0 * x / (2.0 + x) } else { 4.0 / (2.0 + x) };
    (beta, c)
}

/// Current point with caches consistent with `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub z: Vec<f64>,
    /// Nodal field `Sz`.
    pub u: Vec<f64>,
    pub phi: f64,
    pub grad_z: Option<Vec<f64>>,
}

impl ChainState {
    /// Relative mismatch between the caches and a fresh evaluation.
    pub fn cache_error(&self, model: &dyn TargetModel) -> Result<f64> {
        let fresh = evaluate(model, &self.z, self.grad_z.is_some())?;
        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
        let mut err = rel(self.phi, fresh.phi);
        if let (Some(a), Some(b)) = (&self.grad_z, &fresh.grad_z) {
            err = a.iter().zip(b).fold(err, |m, (a, b)| m.max(rel(*a, *b)));
        }
        Ok(err)
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite()
            && self.z.iter().all(|v| v.is_finite())
            && self.grad_z.as_ref().is_none_or(|g| g.iter().all(|v| v.is_finite()))
    }
}

pub fn evaluate(model: &dyn TargetModel, z: &[f64], with_gradient: bool) -> Result<ChainState> {
    let prior = model.prior();
    let u = prior.from_coefficients(z)?;
    let phi = model.potential(&u)?;
    let grad_z = if with_gradient { Some(prior.pullback(&model.grad_potential(&u)?)?) } else { None };
    Ok(ChainState { z: z.to_vec(), u, phi, grad_z })
}

/// `log π̃(z) = −Φ − ½‖z‖²`.
pub fn log_target(state: &ChainState) -> f64 {
    -state.phi - 0.5 * state.z.iter().map(|v| v * v).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub proposed_z: Vec<f64>,
    pub log_ratio: f64,
    pub accepted: bool,
    pub new_state: ChainState,
    /// The curvature kernel could not factorise its local precision.
    pub factorization_failed: bool,
}

pub fn mh_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> Result<bool> {
    let u: f64 = rng.random();
    accept_with(log_ratio, u)
}

fn accept_with(log_ratio: f64, uniform: f64) -> Result<bool> {
    if log_ratio.is_nan() {
        return Err(Error::NanRatio);
    }
    Ok(uniform.ln() < log_ratio)
}

fn check_capabilities(kind: KernelKind, model: &dyn TargetModel) -> Result<()> {
    let caps = model.capabilities();
    if kind.needs_gradient() && !caps.has_gradient {
        return Err(Error::Unsupported("kernel needs the potential gradient"));
    }
    if kind.needs_hessian() && !caps.has_hessian {
        return Err(Error::Unsupported("kernel needs the potential hessian"));
    }
    Ok(())
}

/// Proposal built from the supplied standard normals. `None` signals a
/// failed local factorisation (curvature kernel only).
pub fn propose(
    cfg: &KernelConfig,
    model: &dyn TargetModel,
    state: &ChainState,
    xi: &[f64],
) -> Result<Option<Vec<f64>>> {
    check_capabilities(cfg.kind, model)?;
    check_len(state.z.len(), xi.len())?;
    let z = &state.z;
    Ok(match cfg.kind {
        KernelKind::Pcn | KernelKind::PcnAm0 | KernelKind::PcnAm => {
            Some(pcn::propose_am(cfg.beta, &cfg.scaling, cfg.effective_mean(), z, xi, cfg.kind == KernelKind::Pcn))
        }
        KernelKind::PcnAp => Some(pcn::propose_ap(cfg, z, xi)),
        KernelKind::Pcnl | KernelKind::PcnlAm => Some(langevin::propose_am(cfg, state, xi)),
        KernelKind::PcnlAp => Some(langevin::propose_ap(cfg, state, xi)),
        KernelKind::Mala => Some(langevin::propose_mala(cfg, state, xi)),
        KernelKind::Mgrad => Some(langevin::propose_mgrad(cfg, model, state, xi)),
        KernelKind::PcnlHm => hessian::propose(cfg, model, state, xi)?,
    })
}

fn log_ratio_inner(cfg: &KernelConfig, model: &dyn TargetModel, u: &ChainState, v: &ChainState) -> Result<Option<f64>> {
    Ok(Some(match cfg.kind {
        KernelKind::Pcn => u.phi - v.phi,
        KernelKind::PcnAm0 | KernelKind::PcnAm => pcn::log_ratio_am(cfg, u, v)?,
        KernelKind::PcnAp => pcn::log_ratio_ap(cfg, u, v),
        KernelKind::Pcnl => langevin::log_ratio_pcnl(cfg, u, v),
        KernelKind::PcnlAm => langevin::log_ratio_am(cfg, u, v)?,
        KernelKind::PcnlAp => langevin::log_ratio_ap(cfg, u, v),
        KernelKind::Mala => langevin::log_ratio_mala(cfg, u, v),
        KernelKind::Mgrad => langevin::log_ratio_mgrad(cfg, model, u, v),
        KernelKind::PcnlHm => return hessian::log_ratio(cfg, model, u, v),
    }))
}

/// `J(u, v)`, the log of the acceptance ratio for the move `u → v`.
pub fn log_ratio(cfg: &KernelConfig, model: &dyn TargetModel, from: &ChainState, to: &ChainState) -> Result<f64> {
    check_capabilities(cfg.kind, model)?;
    if cfg.kind.needs_gradient() && (from.grad_z.is_none() || to.grad_z.is_none()) {
        return Err(Error::InvalidParameter("states lack the cached gradient".into()));
    }
    log_ratio_inner(cfg, model, from, to)?
        .ok_or_else(|| Error::NotPositiveDefinite("local precision of the curvature kernel".into()))
}

/// One Metropolis–Hastings transition.
pub fn step<R: Rng + ?Sized>(
    state: &ChainState,
    cfg: &KernelConfig,
    model: &dyn TargetModel,
    rng: &mut R,
) -> Result<StepOutcome> {
    let xi = standard_normals(rng, state.z.len());
    let uniform: f64 = rng.random();
    let reject = |proposed_z: Vec<f64>, failed: bool| StepOutcome {
        proposed_z,
        log_ratio: f64::NEG_INFINITY,
        accepted: false,
        new_state: state.clone(),
        factorization_failed: failed,
    };
    let Some(proposed) = propose(cfg, model, state, &xi)? else {
        return Ok(reject(state.z.clone(), true));
    };
    if proposed.iter().any(|v| !v.is_finite()) {
        return Ok(reject(proposed, false));
    }
    let candidate = evaluate(model, &proposed, cfg.kind.needs_gradient())?;
    if !candidate.is_finite() {
        return Ok(reject(proposed, false));
    }
    let Some(j) = log_ratio_inner(cfg, model, state, &candidate)? else {
        return Ok(reject(proposed, true));
    };
    let accepted = accept_with(j, uniform)?;
    Ok(StepOutcome {
        proposed_z: proposed,
        log_ratio: j,
        accepted,
        new_state: if accepted { candidate } else { state.clone() },
        factorization_failed: false,
    })
}

macro_rules! named_step {
    ($(#[$doc:meta])* $name:ident, $kind:expr) => {
        $(#[$doc])*
        pub fn $name<R: Rng + ?Sized>(
            state: &ChainState,
            cfg: &KernelConfig,
            model: &dyn TargetModel,
            rng: &mut R,
        ) -> Result<StepOutcome> {
            if cfg.kind != $kind {
                return Err(Error::InvalidParameter(format!(
                    "{} called with a {} configuration",
                    stringify!($name),
                    cfg.kind
                )));
            }
            step(state, cfg, model, rng)
        }
    };
}

named_step!(
    /// `z_v = √(1−β²) z_u + βξ`, `J = Φ(u) − Φ(v)`.
    pcn_step,
    KernelKind::Pcn
);
named_step!(
    /// Langevin-drifted Crank–Nicolson.
    pcnl_step,
    KernelKind::Pcnl
);
named_step!(
    /// Langevin proposal relative to the adapted reference `N(0, Λ)`.
    pcnl_am_step,
    KernelKind::PcnlAm
);
named_step!(
    /// Crank–Nicolson contraction towards `m̂` with noise `N(0, Λ)`.
    pcn_am_step,
    KernelKind::PcnAm
);
named_step!(
    /// `pcn_am` with the mean pinned to zero.
    pcn_am0_step,
    KernelKind::PcnAm0
);
named_step!(
    /// Per-coordinate step sizes from the adapted variances.
    pcn_ap_step,
    KernelKind::PcnAp
);
named_step!(
    /// Langevin version of `pcn_ap`.
    pcnl_ap_step,
    KernelKind::PcnlAp
);
named_step!(
    /// Newton-type proposal with the local precision `I + SᵀH(Sz)S`.
    pcnl_hm_step,
    KernelKind::PcnlHm
);
named_step!(
    /// Preconditioned MALA with preconditioner `Λ`.
    mala_step,
    KernelKind::Mala
);
named_step!(
    /// Marginal auxiliary-gradient proposal.
    mgrad_step,
    KernelKind::Mgrad
);

/// Log density of `N(mean, diag(var))` at `x`, dropping `2π` factors.
pub(crate) fn diag_gaussian_logpdf(x: &[f64], mean: impl Iterator<Item = f64>, var: impl Iterator<Item = f64>) -> f64 {
    x.iter().zip(mean.zip(var)).map(|(x, (m, v))| -0.5 * (x - m) * (x - m) / v - 0.5 * v.ln()).sum()
}
