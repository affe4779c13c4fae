//! Online estimation of the reference measure and step-size control.
//!
//! `m̂` and `d̂` are running means and variances of the whitened
//! coefficients with weights `w_j = 1/j`; in whitened coordinates `d̂_k`
//! directly estimates the optimal multiplicative perturbation `d⋆_k`. The
//! kernels consume the truncated views `m̃`, `d̃`, which equal `m̂`, `d̂` on
//! the first `N_j` coordinates and `(0, 1)` beyond.

use serde::{Deserialize, Serialize};

use crate::gaussian::{DiagonalScaling, D_MIN};

const LOGIT_MIN_BETA: f64 = 1e-4;
// sigmoid(40) rounds to exactly 1.0, so β = 1 is reachable.
const LOGIT_MAX: f64 = 40.0;
const LOG_DELTA_BOUND: f64 = 30.0;

fn default_warmup() -> u64 {
    1000
}
fn default_n0() -> usize {
    5
}
fn default_trunc_step() -> usize {
    5
}
fn default_trunc_every() -> u64 {
    1000
}
fn default_d_min() -> f64 {
    D_MIN
}
fn default_rm_exponent() -> f64 {
    0.7
}
fn default_ema_weight() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptConfig {
    pub target_accept: f64,
    #[serde(default = "default_n0")]
    pub n0: usize,
    #[serde(default = "default_trunc_step")]
    pub trunc_step: usize,
    #[serde(default = "default_trunc_every")]
    pub trunc_every: u64,
    #[serde(default = "default_d_min")]
    pub d_min: f64,
    /// Gate nothing: every coordinate is adapted from the start.
    #[serde(default)]
    pub untruncated: bool,
    #[serde(default = "default_rm_exponent")]
    pub rm_exponent: f64,
    #[serde(default = "default_ema_weight")]
    pub ema_weight: f64,
    /// Moment updates before `(m̂, d̂)` reach the kernel. A running variance
    /// over a handful of samples of a sticky chain is near zero, and a kernel
    /// that trusts it stops moving those coordinates for good.
    #[serde(default = "default_warmup")]
    pub warmup: u64,
}

impl AdaptConfig {
    pub fn with_target(target_accept: f64) -> Self {
        Self {
            target_accept,
            n0: default_n0(),
            trunc_step: default_trunc_step(),
            trunc_every: default_trunc_every(),
            d_min: default_d_min(),
            untruncated: false,
            rm_exponent: default_rm_exponent(),
            ema_weight: default_ema_weight(),
            warmup: default_warmup(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(format!("target_accept {} outside (0, 1)", self.target_accept));
        }
        if self.trunc_every == 0 {
            return Err("trunc_every must be positive".into());
        }
        if !(self.d_min > 0.0) {
            return Err("d_min must be positive".into());
        }
        if !(self.rm_exponent > 0.5 && self.rm_exponent <= 1.0) {
            return Err(format!("rm_exponent {} outside (0.5, 1]", self.rm_exponent));
        }
        if !(self.ema_weight > 0.0 && self.ema_weight <= 1.0) {
            return Err("ema_weight must lie in (0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptState {
    pub config: AdaptConfig,
    pub m_hat: Vec<f64>,
    pub d_hat: Vec<f64>,
    /// Number of moment updates applied so far.
    pub j: u64,
    pub n_trunc: usize,
    pub beta: f64,
    pub delta: f64,
    pub accept_ema: f64,
    pub frozen: bool,
    last_growth: u64,
    tuned: u64,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl AdaptState {
    pub fn new(dim: usize, beta: f64, delta: f64, config: AdaptConfig) -> Self {
        let n_trunc = if config.untruncated { dim } else { config.n0.min(dim) };
        Self {
            m_hat: vec![0.0; dim],
            d_hat: vec![1.0; dim],
            j: 0,
            n_trunc,
            beta,
            delta,
            accept_ema: config.target_accept,
            frozen: false,
            last_growth: 0,
            tuned: 0,
            config,
        }
    }

    pub fn dim(&self) -> usize {
        self.m_hat.len()
    }

    /// `m̂ ← w z + (1 − w) m̂`, `d̂ ← w (z − m̂)² + (1 − w) d̂` with `w = 1/j`.
    pub fn update_moments(&mut self, z: &[f64]) {
        if self.frozen {
            return;
        }
        debug_assert_eq!(z.len(), self.dim());
        self.j += 1;
        let w = 1.0 / self.j as f64;
        let floor = self.config.d_min;
        for ((m, d), &x) in self.m_hat.iter_mut().zip(&mut self.d_hat).zip(z) {
            *m = w * x + (1.0 - w) * *m;
            let e = x - *m;
            *d = (w * e * e + (1.0 - w) * *d).max(floor);
        }
    }

    /// Grows `N_j` by `trunc_step` whenever `j` is a positive multiple of
    /// `trunc_every`. Idempotent within one iteration.
    pub fn apply_truncation(&mut self) {
        if self.frozen || self.config.untruncated {
            return;
        }
        let j = self.j;
        if j > 0 && j % self.config.trunc_every == 0 && self.last_growth != j {
            self.last_growth = j;
            self.n_trunc = (self.n_trunc + self.config.trunc_step).min(self.dim());
        }
    }

    /// Leading coordinates whose estimates the kernel uses: `N_j`, or none
    /// during warm-up.
    pub fn active(&self) -> usize {
        if self.j < self.config.warmup {
            0
        } else {
            self.n_trunc
        }
    }

    /// `m̃`: head of `m̂`, zeros beyond the active coordinates.
    pub fn truncated_mean(&self) -> Vec<f64> {
        let n = self.active();
        let mut m = vec![0.0; self.dim()];
        m[..n].copy_from_slice(&self.m_hat[..n]);
        m
    }

    /// `d̃`: head of `d̂`, ones beyond `N_j`.
    pub fn truncated_scaling(&self) -> DiagonalScaling {
        DiagonalScaling::with_floor(self.truncated_variances(), self.config.d_min).expect("estimates stay finite")
    }

    pub fn truncated_variances(&self) -> Vec<f64> {
        let n = self.active();
        let mut d = vec![1.0; self.dim()];
        d[..n].copy_from_slice(&self.d_hat[..n]);
        d
    }

    /// `Σ (d̃_k − 1)²`, summed over the active head only.
    pub fn equivalence_diagnostic(&self) -> f64 {
        self.d_hat[..self.active()].iter().fold(0.0, |s, d| s + (d - 1.0) * (d - 1.0))
    }

    fn gain(&mut self) -> f64 {
        self.tuned += 1;
        (self.tuned as f64).powf(-self.config.rm_exponent)
    }

    fn record(&mut self, acceptance: f64) {
        let w = self.config.ema_weight;
        self.accept_ema = (1.0 - w) * self.accept_ema + w * acceptance;
    }

    /// Robbins–Monro on `logit β`, gain `j^{−0.7}`, `β ∈ [1e-4, 1]`.
    pub fn tune_beta(&mut self, accepted: bool) {
        self.tune_beta_with(f64::from(u8::from(accepted)));
    }

    /// As [`Self::tune_beta`] with a fractional acceptance signal in `[0, 1]`.
    pub fn tune_beta_with(&mut self, acceptance: f64) {
        if self.frozen {
            return;
        }
        self.record(acceptance);
        let gamma = self.gain();
        let innovation = acceptance - self.config.target_accept;
        // The logit round trip is not exact; a zero step must not move β.
        if innovation == 0.0 {
            return;
        }
        // Start from a finite logit even when β sits at exactly 1.
        let x = logit(self.beta).min(LOGIT_MAX) + gamma * innovation;
        self.beta = sigmoid(x.clamp(logit(LOGIT_MIN_BETA), LOGIT_MAX));
    }

    /// Robbins–Monro on `log δ`.
    pub fn tune_delta(&mut self, accepted: bool) {
        self.tune_delta_with(f64::from(u8::from(accepted)));
    }

    pub fn tune_delta_with(&mut self, acceptance: f64) {
        if self.frozen {
            return;
        }
        self.record(acceptance);
        let gamma = self.gain();
        let x = self.delta.ln() + gamma * (acceptance - self.config.target_accept);
        self.delta = x.clamp(-LOG_DELTA_BOUND, LOG_DELTA_BOUND).exp();
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}
