//! JSON experiment configuration. Every section rejects unknown keys, and
//! validation reports all violated fields at once.

use std::path::{Path, PathBuf};

use infdim_core::adaptation::AdaptConfig;
use infdim_core::gaussian::D_MIN;
use infdim_core::models::{LatticePriorConfig, LgcpConfig, LogisticPriorConfig};
use infdim_core::samplers::KernelKind;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub adaptation: AdaptSpec,
    pub run: RunSpec,
    /// Present for the LGCP Metropolis-within-Gibbs driver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gibbs: Option<GibbsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Logistic {
        prior: LogisticPriorConfig,
        data: DataSource,
    },
    BinomialLattice {
        prior: LatticePriorConfig,
        data: DataSource,
    },
    Lgcp {
        params: LgcpConfig,
        data: DataSource,
    },
    /// `Φ ≡ 0` with prior eigenvalues `(1 + k)^{−decay}`.
    Prior {
        dim: usize,
        #[serde(default)]
        decay: f64,
    },
    /// Identity observation of the field with Gaussian noise, diagonal prior.
    GaussianObservation {
        prior_variances: Vec<f64>,
        y: Vec<f64>,
        noise_var: f64,
    },
}

impl ModelSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Logistic { .. } => "logistic",
            ModelSpec::BinomialLattice { .. } => "binomial_lattice",
            ModelSpec::Lgcp { .. } => "lgcp",
            ModelSpec::Prior { .. } => "prior",
            ModelSpec::GaussianObservation { .. } => "gaussian_observation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Path(PathBuf),
    Synthesis(SynthesisSpec),
}

/// Seeds plus the model-specific synthesis knobs; knobs that do not apply
/// to the model are rejected by validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSpec {
    pub true_field_seed: u64,
    pub obs_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_mean: Option<f64>,
}

fn default_beta() -> f64 {
    0.5
}
fn default_delta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// mGrad step size.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        Self { kind, beta: default_beta(), delta: default_delta() }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptSpec {
    /// `false` runs the kernel exactly as configured.
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Defaults to 0.2 for gradient-free kernels and 0.5 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_accept: Option<f64>,
    #[serde(default)]
    pub burn_in: u64,
    /// Stop adapting once burn-in ends.
    #[serde(default = "yes")]
    pub freeze: bool,
    #[serde(default = "defaults::n0")]
    pub n0: usize,
    #[serde(default = "defaults::trunc_step")]
    pub trunc_step: usize,
    #[serde(default = "defaults::trunc_every")]
    pub trunc_every: u64,
    #[serde(default)]
    pub untruncated: bool,
    #[serde(default = "defaults::d_min")]
    pub d_min: f64,
    #[serde(default = "defaults::rm_exponent")]
    pub rm_exponent: f64,
    #[serde(default = "defaults::ema_weight")]
    pub ema_weight: f64,
    #[serde(default = "defaults::warmup")]
    pub warmup: u64,
}

mod defaults {
    pub fn n0() -> usize {
        5
    }
    pub fn trunc_step() -> usize {
        5
    }
    pub fn trunc_every() -> u64 {
        1000
    }
    pub fn d_min() -> f64 {
        super::D_MIN
    }
    pub fn rm_exponent() -> f64 {
        0.7
    }
    pub fn ema_weight() -> f64 {
        0.01
    }
    pub fn warmup() -> u64 {
        1000
    }
    pub fn thin() -> u64 {
        10
    }
    pub fn stride() -> u64 {
        100
    }
    pub fn lags() -> Vec<usize> {
        vec![1, 10, 50]
    }
    pub fn beta_threshold() -> f64 {
        0.9
    }
    pub fn theta_step() -> f64 {
        0.1
    }
    pub fn theta_target() -> f64 {
        0.3
    }
}

impl Default for AdaptSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            target_accept: None,
            burn_in: 0,
            freeze: true,
            n0: defaults::n0(),
            trunc_step: defaults::trunc_step(),
            trunc_every: defaults::trunc_every(),
            untruncated: false,
            d_min: defaults::d_min(),
            rm_exponent: defaults::rm_exponent(),
            ema_weight: defaults::ema_weight(),
            warmup: defaults::warmup(),
        }
    }
}

impl AdaptSpec {
    pub fn core(&self, kind: KernelKind) -> AdaptConfig {
        AdaptConfig {
            target_accept: self.target_accept.unwrap_or(kind.default_target_accept()),
            n0: self.n0,
            trunc_step: self.trunc_step,
            trunc_every: self.trunc_every,
            d_min: self.d_min,
            untruncated: self.untruncated,
            rm_exponent: self.rm_exponent,
            ema_weight: self.ema_weight,
            warmup: self.warmup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Total iterations, burn-in included.
    pub iterations: u64,
    pub seed: u64,
    #[serde(default = "defaults::thin")]
    pub thin: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "defaults::stride")]
    pub adapt_log_stride: u64,
    #[serde(default = "defaults::lags")]
    pub acf_lags: Vec<usize>,
    /// Leading coordinates kept at full resolution for ESS and ACF;
    /// defaults to `min(dim, 64)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracked_coords: Option<usize>,
    /// The summary reports the first iteration from which β stays at or
    /// above this value.
    #[serde(default = "defaults::beta_threshold")]
    pub beta_threshold: f64,
}

impl RunSpec {
    pub fn new(iterations: u64, seed: u64) -> Self {
        Self {
            iterations,
            seed,
            thin: defaults::thin(),
            output_dir: None,
            adapt_log_stride: defaults::stride(),
            acf_lags: defaults::lags(),
            tracked_coords: None,
            beta_threshold: defaults::beta_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSpec {
    /// Initial random-walk scale on `(log σ, log τ)`; 0 disables the θ block.
    #[serde(default = "defaults::theta_step")]
    pub theta_step: f64,
    #[serde(default = "defaults::theta_target")]
    pub target_accept: f64,
}

impl Default for GibbsSpec {
    fn default() -> Self {
        Self { theta_step: defaults::theta_step(), target_accept: defaults::theta_target() }
    }
}

/// Field kernels the Gibbs driver accepts.
pub const GIBBS_KERNELS: [KernelKind; 3] = [KernelKind::PcnAm, KernelKind::PcnlAm, KernelKind::Mala];

fn check_unit(errors: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v < 1.0) {
        errors.push(format!("{name} = {v} must lie in (0, 1)"));
    }
}

fn check_positive(errors: &mut Vec<String>, name: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        errors.push(format!("{name} = {v} must be positive"));
    }
}

fn check_core(errors: &mut Vec<String>, name: &str, r: infdim_core::Result<()>) {
    if let Err(e) = r {
        errors.push(format!("{name}: {e}"));
    }
}

impl SynthesisSpec {
    fn check(&self, model: &str, errors: &mut Vec<String>) {
        let uses = |field: &str| match model {
            "logistic" => matches!(field, "n_points" | "input_dim"),
            "binomial_lattice" => matches!(field, "obs_fraction" | "trials_mean"),
            _ => false,
        };
        let present = [
            ("n_points", self.n_points.is_some()),
            ("input_dim", self.input_dim.is_some()),
            ("obs_fraction", self.obs_fraction.is_some()),
            ("trials_mean", self.trials_mean.is_some()),
        ];
        for (field, set) in present {
            if set && !uses(field) {
                errors.push(format!("model.data.synthesis.{field} does not apply to a {model} model"));
            }
        }
        match model {
            "logistic" => {
                if self.n_points.unwrap_or(0) == 0 {
                    errors.push("model.data.synthesis.n_points must be a positive integer".into());
                }
                if self.input_dim.unwrap_or(0) == 0 {
                    errors.push("model.data.synthesis.input_dim must be a positive integer".into());
                }
            }
            "binomial_lattice" => match self.obs_fraction {
                Some(f) if f > 0.0 && f <= 1.0 => {}
                _ => errors.push("model.data.synthesis.obs_fraction must lie in (0, 1]".into()),
            },
            _ => {}
        }
        if let Some(t) = self.trials_mean {
            if !(t.is_finite() && t >= 0.0) {
                errors.push("model.data.synthesis.trials_mean must be nonnegative".into());
            }
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let model = self.model.kind_name();
        match &self.model {
            ModelSpec::Logistic { prior, data } => {
                check_core(&mut errors, "model.prior", prior.validate());
                if let DataSource::Synthesis(s) = data {
                    s.check(model, &mut errors);
                }
            }
            ModelSpec::BinomialLattice { prior, data } => {
                check_core(&mut errors, "model.prior", prior.validate());
                if let DataSource::Synthesis(s) = data {
                    s.check(model, &mut errors);
                }
            }
            ModelSpec::Lgcp { params, data } => {
                check_core(&mut errors, "model.params", params.validate());
                if let DataSource::Synthesis(s) = data {
                    s.check(model, &mut errors);
                }
            }
            ModelSpec::Prior { dim, decay } => {
                if *dim == 0 {
                    errors.push("model.dim must be positive".into());
                }
                if !(decay.is_finite() && *decay >= 0.0) {
                    errors.push("model.decay must be nonnegative".into());
                }
            }
            ModelSpec::GaussianObservation { prior_variances, y, noise_var } => {
                if prior_variances.is_empty() {
                    errors.push("model.prior_variances must be nonempty".into());
                }
                if y.len() != prior_variances.len() {
                    errors.push(format!(
                        "model.y has {} entries, prior_variances has {}",
                        y.len(),
                        prior_variances.len()
                    ));
                }
                check_positive(&mut errors, "model.noise_var", *noise_var);
            }
        }

        let k = &self.kernel;
        if !(k.beta > 0.0 && k.beta <= 1.0) {
            errors.push(format!("kernel.beta = {} must lie in (0, 1]", k.beta));
        }
        check_positive(&mut errors, "kernel.delta", k.delta);

        let a = &self.adaptation;
        if let Some(t) = a.target_accept {
            check_unit(&mut errors, "adaptation.target_accept", t);
        }
        if let Err(e) = a.core(k.kind).validate() {
            if a.target_accept.is_none_or(|t| t > 0.0 && t < 1.0) {
                errors.push(format!("adaptation: {e}"));
            }
        }

        let r = &self.run;
        if r.iterations <= a.burn_in {
            errors.push(format!("run.iterations = {} must exceed adaptation.burn_in = {}", r.iterations, a.burn_in));
        } else if r.iterations - a.burn_in < infdim_core::diagnostics::MIN_ESS_LENGTH as u64 {
            errors.push(format!(
                "run.iterations - adaptation.burn_in must be at least {} for ESS",
                infdim_core::diagnostics::MIN_ESS_LENGTH
            ));
        }
        if r.thin == 0 {
            errors.push("run.thin must be positive".into());
        }
        if r.adapt_log_stride == 0 {
            errors.push("run.adapt_log_stride must be positive".into());
        }
        if r.acf_lags.is_empty() || r.acf_lags.contains(&0) {
            errors.push("run.acf_lags must be a nonempty list of positive lags".into());
        } else if r.acf_lags.iter().any(|&l| l as u64 >= r.iterations.saturating_sub(a.burn_in)) {
            errors.push("run.acf_lags must be shorter than the post-burn-in run".into());
        }
        if r.tracked_coords == Some(0) {
            errors.push("run.tracked_coords must be positive".into());
        }
        if !(r.beta_threshold > 0.0 && r.beta_threshold <= 1.0) {
            errors.push("run.beta_threshold must lie in (0, 1]".into());
        }

        if let Some(g) = &self.gibbs {
            if !matches!(self.model, ModelSpec::Lgcp { .. }) {
                errors.push(format!("gibbs applies to lgcp models only, not {model}"));
            }
            if !GIBBS_KERNELS.contains(&k.kind) {
                errors.push(format!(
                    "kernel.kind = {} cannot drive the Gibbs field block (pcn_am, pcnl_am, mala)",
                    k.kind
                ));
            }
            if !(g.theta_step.is_finite() && g.theta_step >= 0.0) {
                errors.push("gibbs.theta_step must be nonnegative".into());
            }
            check_unit(&mut errors, "gibbs.target_accept", g.target_accept);
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Validation(errors))
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::invalid(format!("{}: {e}", path.display())))
}

/// Relative data paths are resolved against the config file's directory.
fn resolve_paths(cfg: &mut ExperimentConfig, base: &Path) {
    if let ModelSpec::Logistic { data: DataSource::Path(p), .. }
    | ModelSpec::BinomialLattice { data: DataSource::Path(p), .. }
    | ModelSpec::Lgcp { data: DataSource::Path(p), .. } = &mut cfg.model
    {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = read_json(path)?;
    resolve_paths(&mut cfg, path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}

/// One base experiment run under several kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub base: ExperimentConfig,
    pub kernels: Vec<KernelSpec>,
}

impl CompareConfig {
    /// One config per kernel; run directories become `<output_dir>/<i>_<kind>`.
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        self.kernels
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let mut c = self.base.clone();
                c.kernel = k.clone();
                c.run.output_dir = self.base.run.output_dir.as_ref().map(|d| d.join(format!("{i}_{}", k.kind)));
                c
            })
            .collect()
    }
}

pub fn load_compare_config(path: &Path) -> Result<CompareConfig> {
    let mut cfg: CompareConfig = read_json(path)?;
    resolve_paths(&mut cfg.base, path.parent().unwrap_or(Path::new(".")));
    if cfg.kernels.is_empty() {
        return Err(HarnessError::invalid("kernels must list at least one kernel"));
    }
    let mut errors = Vec::new();
    for (i, c) in cfg.expand().iter().enumerate() {
        if let Err(HarnessError::Validation(es)) = c.validate() {
            errors.extend(es.into_iter().map(|e| format!("kernels[{i}]: {e}")));
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(HarnessError::Validation(errors))
    }
}
