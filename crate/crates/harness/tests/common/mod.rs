#![allow(dead_code)]

use infdim_harness::ExperimentConfig;
use serde_json::{json, Value};

pub fn config(v: Value) -> ExperimentConfig {
    serde_json::from_value(v).expect("test config parses")
}

/// `Φ ≡ 0` on `dim` coordinates with unit prior variances.
pub fn prior_config(dim: usize, kernel: &str, iterations: u64, seed: u64) -> ExperimentConfig {
    config(json!({
        "model": { "kind": "prior", "dim": dim },
        "kernel": { "kind": kernel },
        "adaptation": { "burn_in": 0, "enabled": false },
        "run": { "iterations": iterations, "seed": seed, "thin": 1 }
    }))
}

/// The two-coordinate classifier whose posterior is known by quadrature;
/// same data and prior as the core test suite's oracle target.
pub fn oracle_model() -> Value {
    json!({
        "kind": "logistic",
        "prior": { "kernel_variance": 2.0, "lengthscale": 1.0, "truncation": 2 },
        "data": { "synthesis": { "true_field_seed": 7, "obs_seed": 8, "n_points": 20, "input_dim": 2 } }
    })
}

pub fn oracle_config(kernel: &str, burn_in: u64, iterations: u64, seed: u64) -> ExperimentConfig {
    config(json!({
        "model": oracle_model(),
        "kernel": { "kind": kernel },
        "adaptation": { "burn_in": burn_in },
        "run": { "iterations": iterations, "seed": seed }
    }))
}

pub fn lgcp_model(n: usize, seed: u64) -> Value {
    json!({
        "kind": "lgcp",
        "params": { "n1": n, "n2": n, "sigma": 1.0, "tau": 22026.0, "cell_area": 1.0 },
        "data": { "synthesis": { "true_field_seed": seed, "obs_seed": seed + 1 } }
    })
}
