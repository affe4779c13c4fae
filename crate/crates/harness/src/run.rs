//! Experiment drivers: a single adaptive chain, and the LGCP
//! Metropolis-within-Gibbs loop that alternates a field step with a
//! random-walk step on `(log σ, log τ)`.

use std::time::Instant;

use infdim_core::chain::AdaptiveChain;
use infdim_core::diagnostics::{autocorrelation, ess, mc_standard_error, EssSummary, LagAccumulator};
use infdim_core::models::LgcpModel;
use infdim_core::rng::{chain_rng, standard_normals, stream_rng, ChainRng};
use infdim_core::samplers::{evaluate, mh_accept, KernelConfig, KernelKind};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, GibbsSpec, ModelSpec, GIBBS_KERNELS};
use crate::error::{HarnessError, Result};
use crate::model::{build_model, BuiltModel};
use crate::output::{write_results, OutputPaths};

/// Tracked coordinates when the config leaves it open.
pub const DEFAULT_TRACKED: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordStats {
    pub name: String,
    pub mean: f64,
    pub var: f64,
    /// Monte Carlo standard errors of `mean` and `var`.
    pub mean_se: f64,
    pub var_se: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssStats {
    pub min_ess: f64,
    pub median_ess: f64,
    pub min_per_iter: f64,
    pub median_per_iter: f64,
    /// Coordinates whose raw estimate exceeded the sample count.
    pub capped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagValue {
    pub lag: usize,
    /// Mean over nodal cells; absent when the lag exceeds the run.
    pub mean_acf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSummary {
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Proposals whose prior operator could not be built.
    pub rejected_invalid: u64,
    pub final_step: f64,
    pub final_log_sigma: f64,
    pub final_log_tau: f64,
    pub log_sigma: CoordStats,
    pub log_tau: CoordStats,
}

/// Everything in a run that is a function of `(config, seed)` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub kernel: KernelKind,
    pub model: String,
    pub dim: usize,
    pub nodal_dim: usize,
    pub iterations: u64,
    pub burn_in: u64,
    /// Main-phase acceptance rate.
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: Option<f64>,
    pub final_beta: f64,
    pub final_delta: f64,
    pub beta_threshold: f64,
    /// First iteration with β at or above the threshold.
    pub beta_first_reached: Option<u64>,
    /// First iteration from which β never again drops below the threshold.
    pub beta_settled_at: Option<u64>,
    pub adapt_updates: u64,
    pub final_n_trunc: usize,
    pub equivalence_diagnostic: f64,
    pub factorization_failures: u64,
    pub ess: EssStats,
    pub coordinates: Vec<CoordStats>,
    /// Online mean and variance estimates for the tracked coordinates.
    pub m_hat: Vec<f64>,
    pub d_hat: Vec<f64>,
    pub field_acf: Vec<LagValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptRow {
    pub iter: u64,
    pub j: u64,
    pub beta: f64,
    pub delta: f64,
    pub n_trunc: usize,
    pub accept_ema: f64,
    pub equivalence_diagnostic: f64,
}

/// Named full-resolution post-burn-in columns (iteration-indexed lags).
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub summary: RunSummary,
    pub wall_seconds: f64,
    /// Summary ESS rates against wall time.
    pub ess_timing: EssSummary,
    /// Header `iter` followed by the column names of `columns`.
    pub trace_rows: Vec<(u64, Vec<f64>)>,
    pub adapt_rows: Vec<AdaptRow>,
    pub columns: Columns,
    /// Set when the config names an output directory.
    pub paths: Option<OutputPaths>,
}

impl RunResult {
    pub fn acceptance_rate(&self) -> f64 {
        self.summary.acceptance_rate
    }

    pub fn final_beta(&self) -> f64 {
        self.summary.final_beta
    }
}

/// Runs the configured experiment and writes its outputs when
/// `run.output_dir` is set. Configs with a `gibbs` section go through
/// [`run_lgcp_gibbs`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    if let Some(g) = &config.gibbs {
        return run_lgcp_gibbs_with(config, g);
    }
    config.validate()?;
    let model = build_model(&config.model)?;
    finish(config, drive(config, model, None)?)
}

pub fn run_lgcp_gibbs(config: &ExperimentConfig) -> Result<RunResult> {
    let spec = config.gibbs.clone().unwrap_or_default();
    run_lgcp_gibbs_with(config, &spec)
}

fn run_lgcp_gibbs_with(config: &ExperimentConfig, spec: &GibbsSpec) -> Result<RunResult> {
    let mut errors = Vec::new();
    if !matches!(config.model, ModelSpec::Lgcp { .. }) {
        errors.push(format!("the Gibbs driver needs an lgcp model, not {}", config.model.kind_name()));
    }
    if !GIBBS_KERNELS.contains(&config.kernel.kind) {
        errors.push(format!("kernel.kind = {} cannot drive the Gibbs field block", config.kernel.kind));
    }
    if !errors.is_empty() {
        return Err(HarnessError::Validation(errors));
    }
    let mut config = config.clone();
    config.gibbs = Some(spec.clone());
    config.validate()?;
    let model = build_model(&config.model)?;
    finish(&config, drive(&config, model, Some(spec))?)
}

fn finish(config: &ExperimentConfig, mut result: RunResult) -> Result<RunResult> {
    if let Some(dir) = &config.run.output_dir {
        result.paths = Some(write_results(&result, dir)?);
    }
    Ok(result)
}

/// Random-walk MH on `θ = (log σ, log τ)` given the whitened field.
struct ThetaBlock {
    theta: [f64; 2],
    log_step: f64,
    target: f64,
    rng: ChainRng,
    proposals: u64,
    accepted: u64,
    rejected_invalid: u64,
}

impl ThetaBlock {
    fn step(&mut self, model: &mut LgcpModel, chain: &mut AdaptiveChain, adapting: bool) -> Result<()> {
        let s = self.log_step.exp();
        let xi = standard_normals(&mut self.rng, 2);
        let prop = [self.theta[0] + s * xi[0], self.theta[1] + s * xi[1]];
        self.proposals += 1;
        let mut accepted = false;
        match model.with_hyper(prop[0].exp(), prop[1].exp()) {
            Ok(next) => {
                let state = evaluate(&next, &chain.state.z, chain.cfg.kind.needs_gradient())?;
                let hp = model.config().hyper_prior;
                let log_r = if state.phi.is_finite() {
                    chain.state.phi - state.phi + hp.log_density(prop) - hp.log_density(self.theta)
                } else {
                    f64::NEG_INFINITY
                };
                if mh_accept(log_r, &mut self.rng)? {
                    *model = next;
                    chain.state = state;
                    self.theta = prop;
                    accepted = true;
                }
            }
            Err(e) => {
                self.rejected_invalid += 1;
                log::debug!("θ proposal ({:.3}, {:.3}) rejected: {e}", prop[0], prop[1]);
            }
        }
        self.accepted += u64::from(accepted);
        if adapting {
            let gain = (self.proposals as f64).powf(-0.7);
            self.log_step += gain * (f64::from(u8::from(accepted)) - self.target);
        }
        Ok(())
    }
}

fn column_stats(name: String, col: &[f64]) -> Result<CoordStats> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let sq: Vec<f64> = col.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = sq.iter().sum::<f64>() / (n - 1.0);
    Ok(CoordStats {
        name,
        mean,
        var,
        mean_se: mc_standard_error(col)?,
        var_se: mc_standard_error(&sq)?,
        ess: ess(col)?.ess,
    })
}

/// ACF of each column at the given lags.
pub fn acf_rows(columns: &Columns, lags: &[usize]) -> Result<Vec<Vec<f64>>> {
    columns
        .values
        .iter()
        .map(|c| lags.iter().map(|&l| Ok(autocorrelation(c, l)?.value)).collect::<Result<Vec<f64>>>())
        .collect()
}

fn drive(config: &ExperimentConfig, mut model: BuiltModel, gibbs: Option<&GibbsSpec>) -> Result<RunResult> {
    let start = Instant::now();
    let (run, adapt_spec, kernel) = (&config.run, &config.adaptation, &config.kernel);
    let target = model.target();
    let (dim, nodal_dim) = (target.dim(), target.nodal_dim());
    let tracked = run.tracked_coords.unwrap_or(DEFAULT_TRACKED).min(dim);
    let kcfg = KernelConfig::new(kernel.kind, kernel.beta, dim).with_delta(kernel.delta);
    let z0 = vec![0.0; dim];
    let mut chain = if adapt_spec.enabled {
        AdaptiveChain::new(target, kcfg, adapt_spec.core(kernel.kind), &z0)?
    } else {
        AdaptiveChain::fixed(target, kcfg, &z0)?
    };
    log::info!(
        "{} on {} (dim {dim}, nodal {nodal_dim}), {} iterations, burn-in {}",
        kernel.kind,
        config.model.kind_name(),
        run.iterations,
        adapt_spec.burn_in
    );

    let mut theta = match (gibbs, &model) {
        (Some(g), BuiltModel::Lgcp(m)) if g.theta_step > 0.0 => {
            let (sigma, tau) = m.hyper();
            Some(ThetaBlock {
                theta: [sigma.ln(), tau.ln()],
                log_step: g.theta_step.ln(),
                target: g.target_accept,
                rng: stream_rng(run.seed, 1),
                proposals: 0,
                accepted: 0,
                rejected_invalid: 0,
            })
        }
        _ => None,
    };
    let theta_initial = match &model {
        BuiltModel::Lgcp(m) if gibbs.is_some() => Some([m.hyper().0.ln(), m.hyper().1.ln()]),
        _ => None,
    };

    let mut names: Vec<String> = (1..=tracked).map(|k| format!("z_{k}")).collect();
    if theta_initial.is_some() {
        names.extend(["log_sigma".to_string(), "log_tau".to_string()]);
    }
    let n_cols = names.len();
    let post = (run.iterations - adapt_spec.burn_in) as usize;
    let mut values: Vec<Vec<f64>> = (0..n_cols).map(|_| Vec::with_capacity(post)).collect();
    let mut trace_rows = Vec::with_capacity((run.iterations / run.thin) as usize);
    let mut adapt_rows = Vec::with_capacity((run.iterations / run.adapt_log_stride) as usize);
    let mut field_acf = LagAccumulator::new(nodal_dim, &run.acf_lags)?;
    let mut rng = chain_rng(run.seed);

    let below = |b: f64| b < run.beta_threshold;
    let mut first_reached = (!below(chain.cfg.beta)).then_some(0);
    let mut last_below = below(chain.cfg.beta).then_some(0);
    let mut burn_in_accepted = None;
    let mut row = Vec::with_capacity(n_cols);

    for it in 1..=run.iterations {
        if it == adapt_spec.burn_in + 1 {
            if adapt_spec.freeze {
                chain.freeze();
            }
            burn_in_accepted = Some(chain.stats.accepted);
        }
        chain.step(model.target(), &mut rng)?;
        if let (Some(block), BuiltModel::Lgcp(m)) = (theta.as_mut(), &mut model) {
            let adapting = it <= adapt_spec.burn_in && !chain.adapt.frozen;
            block.step(m, &mut chain, adapting)?;
        }

        let beta = chain.cfg.beta;
        if below(beta) {
            last_below = Some(it);
        } else if first_reached.is_none() {
            first_reached = Some(it);
        }

        row.clear();
        row.extend_from_slice(&chain.state.z[..tracked]);
        if let Some(t0) = theta_initial {
            let t = theta.as_ref().map_or(t0, |b| b.theta);
            row.extend_from_slice(&t);
        }
        if it % run.thin == 0 {
            trace_rows.push((it, row.clone()));
        }
        if it % run.adapt_log_stride == 0 {
            let a = &chain.adapt;
            adapt_rows.push(AdaptRow {
                iter: it,
                j: a.j,
                beta,
                delta: chain.cfg.delta,
                n_trunc: a.n_trunc,
                accept_ema: a.accept_ema,
                equivalence_diagnostic: a.equivalence_diagnostic(),
            });
        }
        if it > adapt_spec.burn_in {
            for (col, v) in values.iter_mut().zip(&row) {
                col.push(*v);
            }
            field_acf.push(&chain.state.u);
        }
    }
    let wall_seconds = start.elapsed().as_secs_f64();

    let stats = chain.stats;
    let burn_acc = burn_in_accepted.unwrap_or(stats.accepted);
    let main_steps = run.iterations - adapt_spec.burn_in;
    let columns = Columns { names, values };
    let coordinates: Vec<CoordStats> =
        (0..tracked).map(|k| column_stats(columns.names[k].clone(), &columns.values[k])).collect::<Result<_>>()?;
    let mut capped = 0;
    for c in &columns.values[..tracked] {
        capped += usize::from(ess(c)?.capped);
    }
    let ess_values: Vec<f64> = coordinates.iter().map(|c| c.ess).collect();
    let ess_timing = EssSummary::from_ess(&ess_values, wall_seconds, main_steps)?;

    let theta_summary = match theta_initial {
        Some(t0) => {
            let block = theta.as_ref();
            let (proposals, accepted) = block.map_or((0, 0), |b| (b.proposals, b.accepted));
            let t = block.map_or(t0, |b| b.theta);
            Some(ThetaSummary {
                proposals,
                accepted,
                acceptance_rate: if proposals == 0 { 0.0 } else { accepted as f64 / proposals as f64 },
                rejected_invalid: block.map_or(0, |b| b.rejected_invalid),
                final_step: block.map_or(0.0, |b| b.log_step.exp()),
                final_log_sigma: t[0],
                final_log_tau: t[1],
                log_sigma: column_stats("log_sigma".into(), &columns.values[tracked])?,
                log_tau: column_stats("log_tau".into(), &columns.values[tracked + 1])?,
            })
        }
        None => None,
    };

    let a = &chain.adapt;
    let summary = RunSummary {
        kernel: kernel.kind,
        model: config.model.kind_name().to_string(),
        dim,
        nodal_dim,
        iterations: run.iterations,
        burn_in: adapt_spec.burn_in,
        acceptance_rate: (stats.accepted - burn_acc) as f64 / main_steps as f64,
        burn_in_acceptance_rate: (adapt_spec.burn_in > 0).then(|| burn_acc as f64 / adapt_spec.burn_in as f64),
        final_beta: chain.cfg.beta,
        final_delta: chain.cfg.delta,
        beta_threshold: run.beta_threshold,
        beta_first_reached: first_reached,
        beta_settled_at: match last_below {
            None => Some(0),
            Some(t) if t == run.iterations => None,
            Some(t) => Some(t + 1),
        },
        adapt_updates: a.j,
        final_n_trunc: a.n_trunc,
        equivalence_diagnostic: a.equivalence_diagnostic(),
        factorization_failures: stats.factorization_failures,
        ess: EssStats {
            min_ess: ess_timing.min_ess,
            median_ess: ess_timing.median_ess,
            min_per_iter: ess_timing.min_per_iter,
            median_per_iter: ess_timing.median_per_iter,
            capped,
        },
        coordinates,
        m_hat: a.m_hat[..tracked].to_vec(),
        d_hat: a.d_hat[..tracked].to_vec(),
        field_acf: run
            .acf_lags
            .iter()
            .zip(field_acf.mean_acf())
            .map(|(&lag, m)| LagValue { lag, mean_acf: m })
            .collect(),
        theta: theta_summary,
    };
    log::info!(
        "done in {wall_seconds:.2}s: acceptance {:.3}, β {:.4}, min ESS {:.1}",
        summary.acceptance_rate,
        summary.final_beta,
        summary.ess.min_ess
    );
    Ok(RunResult {
        config: config.clone(),
        summary,
        wall_seconds,
        ess_timing,
        trace_rows,
        adapt_rows,
        columns,
        paths: None,
    })
}
