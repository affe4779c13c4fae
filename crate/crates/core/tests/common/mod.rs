#![allow(dead_code)]

pub mod oracle;

use infdim_core::models::{simulate_classifier, ClassifierSynthesis, LogisticClassifierModel, LogisticPriorConfig};

/// Small synthetic classifier truncated to `dim` whitened coordinates.
pub fn logistic_target(dim: usize, n_points: usize, seed: u64) -> LogisticClassifierModel {
    let cfg = LogisticPriorConfig { kernel_variance: 2.0, lengthscale: 1.0, jitter: None, truncation: Some(dim) };
    let synth = ClassifierSynthesis { n_points, input_dim: 2 };
    let (data, _) = simulate_classifier(&synth, &cfg, seed, seed + 1).unwrap();
    LogisticClassifierModel::new(data, &cfg).unwrap()
}

/// The two-coordinate target whose posterior is computed by quadrature.
pub fn oracle_2d() -> LogisticClassifierModel {
    logistic_target(2, 20, 7)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
