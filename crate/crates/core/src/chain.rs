//! A single adaptive chain: kernel step followed by moment, truncation and
//! step-size updates, with the adapted quantities copied into the kernel
//! configuration after every step.

use rand::Rng;

use crate::adaptation::{AdaptConfig, AdaptState};
use crate::error::{Error, Result};
use crate::models::TargetModel;
use crate::samplers::{evaluate, step, ChainState, KernelConfig};

#[cfg(debug_assertions)]
const CACHE_CHECK_EVERY: u64 = 1024;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChainStats {
    pub steps: u64,
    pub accepted: u64,
    pub factorization_failures: u64,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainStep {
    pub accepted: bool,
    pub log_ratio: f64,
    pub factorization_failed: bool,
}

#[derive(Debug, Clone)]
pub struct AdaptiveChain {
    pub state: ChainState,
    pub cfg: KernelConfig,
    pub adapt: AdaptState,
    pub stats: ChainStats,
}

impl AdaptiveChain {
    pub fn new(model: &dyn TargetModel, cfg: KernelConfig, adapt: AdaptConfig, z0: &[f64]) -> Result<Self> {
        cfg.validate(model.dim())?;
        adapt.validate().map_err(Error::InvalidParameter)?;
        let state = evaluate(model, z0, cfg.kind.needs_gradient())?;
        if !state.is_finite() {
            return Err(Error::NonFinite("initial chain state"));
        }
        let adapt = AdaptState::new(model.dim(), cfg.beta, cfg.delta, adapt);
        let mut chain = Self { state, cfg, adapt, stats: ChainStats::default() };
        chain.sync_config();
        Ok(chain)
    }

    /// Chain whose kernel configuration never changes.
    pub fn fixed(model: &dyn TargetModel, cfg: KernelConfig, z0: &[f64]) -> Result<Self> {
        let mut chain = Self::new(model, cfg.clone(), AdaptConfig::with_target(0.5), z0)?;
        chain.adapt.freeze();
        chain.cfg = cfg;
        Ok(chain)
    }

    pub fn step<R: Rng + ?Sized>(&mut self, model: &dyn TargetModel, rng: &mut R) -> Result<ChainStep> {
        let out = step(&self.state, &self.cfg, model, rng)?;
        self.stats.steps += 1;
        self.stats.accepted += u64::from(out.accepted);
        self.stats.factorization_failures += u64::from(out.factorization_failed);
        let summary = ChainStep {
            accepted: out.accepted,
            log_ratio: out.log_ratio,
            factorization_failed: out.factorization_failed,
        };
        if out.accepted {
            self.state = out.new_state;
        }
        #[cfg(debug_assertions)]
        if self.stats.steps % CACHE_CHECK_EVERY == 0 {
            let err = self.state.cache_error(model)?;
            debug_assert!(err < 1e-9, "chain cache drifted from its state (relative error {err:e})");
        }
        if !self.adapt.frozen {
            self.adapt.update_moments(&self.state.z);
            self.adapt.apply_truncation();
            if self.cfg.kind.tunes_delta() {
                self.adapt.tune_delta(out.accepted);
            } else {
                self.adapt.tune_beta(out.accepted);
            }
            self.sync_config();
        }
        Ok(summary)
    }

    fn sync_config(&mut self) {
        self.cfg.beta = self.adapt.beta;
        self.cfg.delta = self.adapt.delta;
        if self.cfg.kind.uses_scaling() {
            self.cfg.scaling = self.adapt.truncated_scaling();
        }
        if self.cfg.kind.uses_mean() {
            self.cfg.mean = self.adapt.truncated_mean();
        }
    }

    pub fn freeze(&mut self) {
        self.adapt.freeze();
    }

    /// Recompute the caches after the model's prior or data changed; the
    /// whitened state `z` is kept.
    pub fn reevaluate(&mut self, model: &dyn TargetModel) -> Result<()> {
        self.state = evaluate(model, &self.state.z, self.cfg.kind.needs_gradient())?;
        Ok(())
    }
}
