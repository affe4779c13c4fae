mod common;

use std::sync::Arc;

use common::{logistic_target, max_abs, oracle_2d};
use infdim_core::gaussian::{sample_prior, GaussianMeasure, SpectralCovariance};
use infdim_core::models::{
    lattice_prior, quadrature_posterior_moments, simulate_binomial, simulate_classifier, simulate_lgcp,
    BinomialLatticeModel, BinomialSynthesis, ClassifierData, ClassifierSynthesis, GaussianObservationModel, HyperPrior,
    LatticeCell, LatticeData, LatticePriorConfig, LgcpConfig, LgcpModel, LogisticClassifierModel, LogisticPriorConfig,
    PriorOnlyModel, TargetModel, TensorQuadrature,
};
use infdim_core::rng::{chain_rng, standard_normals};
use infdim_core::Error;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn lattice_cfg(n1: usize, n2: usize) -> LatticePriorConfig {
    LatticePriorConfig { n1, n2, kappa: 0.7, sigma: 1.3, precision_exponent: 2.0 }
}

fn binomial_model() -> BinomialLatticeModel {
    let cfg = lattice_cfg(5, 6);
    let synth = BinomialSynthesis { obs_fraction: 0.4, trials_mean: 4.0 };
    let (data, _) = simulate_binomial(&cfg, &synth, 3, 4).unwrap();
    BinomialLatticeModel::new(&cfg, &data).unwrap()
}

fn lgcp_cfg(n1: usize, n2: usize) -> LgcpConfig {
    LgcpConfig { n1, n2, cell_area: 0.8, cell_size: 1.0, sigma: 0.8, tau: 2.0, hyper_prior: HyperPrior::default() }
}

fn lgcp_model() -> LgcpModel {
    let cfg = lgcp_cfg(4, 5);
    let (data, _) = simulate_lgcp(&cfg, 5, 6).unwrap();
    LgcpModel::new(&cfg, &data).unwrap()
}

fn all_models() -> Vec<(&'static str, Box<dyn TargetModel>)> {
    let prior = SpectralCovariance::diagonal(vec![2.0, 1.0, 0.5]).unwrap();
    vec![
        ("logistic", Box::new(logistic_target(12, 12, 1)) as Box<dyn TargetModel>),
        ("binomial", Box::new(binomial_model())),
        ("lgcp", Box::new(lgcp_model())),
        ("gaussian", Box::new(GaussianObservationModel::new(prior, vec![0.3, -1.0, 2.0], 0.7).unwrap())),
    ]
}

/// Random nodal points: a prior draw plus a little isotropic noise.
fn probe_points(model: &dyn TargetModel, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = chain_rng(seed);
    let cov = Arc::new(model.prior().clone());
    (0..count)
        .map(|_| {
            let z = sample_prior(&GaussianMeasure::prior(cov.clone()), &mut rng);
            let u = cov.from_coefficients(&z).unwrap();
            let noise = standard_normals(&mut rng, u.len());
            u.iter().zip(noise).map(|(u, e)| u + 0.3 * e).collect()
        })
        .collect()
}

fn central_difference(f: impl Fn(&[f64]) -> f64, u: &[f64], i: usize, h: f64) -> f64 {
    let mut p = u.to_vec();
    p[i] += h;
    let fp = f(&p);
    p[i] -= 2.0 * h;
    (fp - f(&p)) / (2.0 * h)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(a, b)| a - b).collect();
    max_abs(&diff) / max_abs(b).max(1.0)
}

#[test]
fn gradients_match_finite_differences() {
    for (name, model) in all_models() {
        for u in probe_points(model.as_ref(), 20, 31) {
            let g = model.grad_potential(&u).unwrap();
            let fd: Vec<f64> =
                (0..u.len()).map(|i| central_difference(|x| model.potential(x).unwrap(), &u, i, 1e-5)).collect();
            let err = rel(&fd, &g);
            assert!(err < 1e-5, "{name}: gradient relative error {err:e}");
        }
    }
}

#[test]
fn hessians_match_finite_differences() {
    for (name, model) in all_models() {
        for u in probe_points(model.as_ref(), 20, 37) {
            let h = model.hessian_potential(&u).unwrap();
            assert!(h.iter().all(|v| *v >= 0.0), "{name}: curvature must be nonnegative");
            for i in 0..u.len() {
                // Column i of the Hessian: diagonal entry h_i, zeros elsewhere.
                let column: Vec<f64> = (0..u.len())
                    .map(|j| central_difference(|x| model.grad_potential(x).unwrap()[j], &u, i, 1e-5))
                    .collect();
                let mut expect = vec![0.0; u.len()];
                expect[i] = h[i];
                let err = rel(&column, &expect);
                assert!(err < 1e-4, "{name}: Hessian column {i} relative error {err:e}");
            }
        }
    }
}

#[test]
fn potentials_at_zero() {
    let logistic = logistic_target(4, 9, 2);
    let n = logistic.data().len() as f64;
    let zero = vec![0.0; logistic.nodal_dim()];
    assert!((logistic.potential(&zero).unwrap() - n * std::f64::consts::LN_2).abs() < 1e-12);
    let g = logistic.grad_potential(&zero).unwrap();
    for (g, y) in g.iter().zip(&logistic.data().labels) {
        assert_eq!(*g, 0.5 - f64::from(*y));
    }
    assert!(logistic.hessian_potential(&zero).unwrap().iter().all(|&h| h == 0.25));

    let mut cfg = lgcp_cfg(3, 3);
    cfg.cell_area = 1.0;
    let counts = [0, 1, 2, 0, 5, 0, 3, 0, 1];
    let cells = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| LatticeCell { row: k / 3, col: k % 3, count: c, trials: None })
        .collect();
    let lgcp = LgcpModel::new(&cfg, &LatticeData { cells }).unwrap();
    let zero = vec![0.0; 9];
    assert!((lgcp.potential(&zero).unwrap() - (9.0 + lgcp.additive_constant())).abs() < 1e-12);
    let g = lgcp.grad_potential(&zero).unwrap();
    for (g, &y) in g.iter().zip(&counts) {
        assert_eq!(*g, 1.0 - y as f64);
    }
    assert_eq!(lgcp.hessian_potential(&zero).unwrap(), vec![1.0; 9]);
}

#[test]
fn binomial_matches_scalar_log_likelihood() {
    let cfg = lattice_cfg(4, 4);
    let cells = vec![
        LatticeCell { row: 0, col: 0, count: 2, trials: Some(5) },
        LatticeCell { row: 1, col: 3, count: 0, trials: Some(1) },
        LatticeCell { row: 2, col: 1, count: 7, trials: Some(7) },
        LatticeCell { row: 3, col: 2, count: 3, trials: Some(9) },
    ];
    let model = BinomialLatticeModel::new(&cfg, &LatticeData { cells: cells.clone() }).unwrap();
    let mut rng = chain_rng(41);
    for _ in 0..50 {
        let u: Vec<f64> = standard_normals(&mut rng, 16).iter().map(|x| 2.0 * x).collect();
        let mut oracle = 0.0;
        for c in &cells {
            let x = u[c.row * 4 + c.col];
            let p = 1.0 / (1.0 + (-x).exp());
            let (y, n) = (c.count as f64, c.trials.unwrap() as f64);
            oracle -= y * p.ln() + (n - y) * (1.0 - p).ln();
        }
        let phi = model.potential(&u).unwrap();
        assert!((phi - oracle).abs() < 1e-12 * oracle.abs().max(1.0), "{phi} vs {oracle}");
    }
}

/// Neumann 5-point Laplacian `−Δ_h` assembled cell by cell.
fn neumann_laplacian(n1: usize, n2: usize) -> DMatrix<f64> {
    let n = n1 * n2;
    let mut l = DMatrix::zeros(n, n);
    for r in 0..n1 {
        for c in 0..n2 {
            let k = r * n2 + c;
            let mut nb = vec![];
            if r > 0 {
                nb.push(k - n2);
            }
            if r + 1 < n1 {
                nb.push(k + n2);
            }
            if c > 0 {
                nb.push(k - 1);
            }
            if c + 1 < n2 {
                nb.push(k + 1);
            }
            l[(k, k)] = nb.len() as f64;
            for j in nb {
                l[(k, j)] = -1.0;
            }
        }
    }
    l
}

#[test]
fn lattice_spectrum_matches_dense_precision() {
    let cfg = lattice_cfg(4, 4);
    let prior = lattice_prior(&cfg).unwrap();
    let k2 = cfg.kappa * cfg.kappa;
    let a = DMatrix::identity(16, 16) * k2 + neumann_laplacian(4, 4);
    let q = (&a * &a) / (cfg.sigma * cfg.sigma);
    let mut cov_eigs: Vec<f64> = SymmetricEigen::new(q.clone()).eigenvalues.iter().map(|l| 1.0 / l).collect();
    cov_eigs.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in prior.eigenvalues().iter().zip(&cov_eigs) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    // Same operator, not only the same spectrum.
    let c = prior.covariance_matrix();
    assert!((c * q - DMatrix::<f64>::identity(16, 16)).abs().max() < 1e-9);
}

#[test]
fn single_cell_and_jittered_priors() {
    let one = LatticePriorConfig { n1: 1, n2: 1, kappa: 1.0, sigma: 1.0, precision_exponent: 2.0 };
    assert_eq!(lattice_prior(&one).unwrap().eigenvalues(), &[1.0]);
    let cfg = LogisticPriorConfig { kernel_variance: 1.0, lengthscale: 1.0, jitter: None, truncation: None };
    let locs = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
    let prior = infdim_core::models::classifier_prior(&locs, &cfg).unwrap();
    let e = prior.eigenvalues();
    assert!((e[0] - 2.0).abs() < 1e-7);
    assert!((e[1] - 1e-8).abs() < 1e-12);
}

#[test]
fn a1_probe_on_prior_draws() {
    for (name, model) in all_models() {
        let bound = model.growth_bound();
        let cov = Arc::new(model.prior().clone());
        let mut rng = chain_rng(43);
        for _ in 0..1000 {
            let z = sample_prior(&GaussianMeasure::prior(cov.clone()), &mut rng);
            let u = cov.from_coefficients(&z).unwrap();
            let phi = model.potential(&u).unwrap();
            assert!(phi >= -1e-9, "{name}: Φ = {phi}");
            if let Some(b) = bound {
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(phi <= b.k * (1.0 + norm.powf(b.p)), "{name}: Φ = {phi} above growth bound");
            }
        }
    }
}

#[test]
fn missing_capabilities_and_bad_input() {
    let prior = SpectralCovariance::diagonal(vec![1.0, 1.0]).unwrap();
    let m = PriorOnlyModel::new(prior);
    assert_eq!(m.potential(&[1.0, 2.0]).unwrap(), 0.0);
    let model = lgcp_model();
    let mut u = vec![0.0; model.nodal_dim()];
    u[3] = f64::NAN;
    assert!(matches!(model.potential(&u), Err(Error::NonFinite(_))));
    assert!(model.potential(&[0.0]).is_err());

    struct NoGrad(SpectralCovariance);
    impl TargetModel for NoGrad {
        fn prior(&self) -> &SpectralCovariance {
            &self.0
        }
        fn capabilities(&self) -> infdim_core::models::Capabilities {
            infdim_core::models::Capabilities { has_gradient: false, has_hessian: false }
        }
        fn potential(&self, _u: &[f64]) -> infdim_core::Result<f64> {
            Ok(0.0)
        }
    }
    let ng = NoGrad(SpectralCovariance::diagonal(vec![1.0]).unwrap());
    assert!(matches!(ng.grad_potential(&[0.0]), Err(Error::Unsupported(_))));
    assert!(matches!(ng.hessian_potential(&[0.0]), Err(Error::Unsupported(_))));
}

#[test]
fn simulation_is_deterministic() {
    let cfg = LogisticPriorConfig { kernel_variance: 1.0, lengthscale: 1.0, jitter: None, truncation: Some(5) };
    let synth = ClassifierSynthesis { n_points: 30, input_dim: 3 };
    let a = simulate_classifier(&synth, &cfg, 1, 2).unwrap();
    assert_eq!(a, simulate_classifier(&synth, &cfg, 1, 2).unwrap());
    assert_ne!(a.0.locations, simulate_classifier(&synth, &cfg, 1, 3).unwrap().0.locations);

    let lc = lattice_cfg(6, 6);
    let bs = BinomialSynthesis { obs_fraction: 0.5, trials_mean: 4.0 };
    assert_eq!(simulate_binomial(&lc, &bs, 8, 9).unwrap(), simulate_binomial(&lc, &bs, 8, 9).unwrap());
    let gc = lgcp_cfg(5, 5);
    assert_eq!(simulate_lgcp(&gc, 8, 9).unwrap(), simulate_lgcp(&gc, 8, 9).unwrap());
    // The field depends on the field seed only.
    assert_eq!(simulate_lgcp(&gc, 8, 9).unwrap().1, simulate_lgcp(&gc, 8, 10).unwrap().1);
}

#[test]
fn binomial_trials_are_one_plus_poisson() {
    let lc = lattice_cfg(30, 30);
    let bs = BinomialSynthesis { obs_fraction: 1.0, trials_mean: 4.0 };
    let (data, _) = simulate_binomial(&lc, &bs, 1, 2).unwrap();
    assert_eq!(data.cells.len(), 900);
    let extra: Vec<f64> = data.cells.iter().map(|c| c.trials.unwrap() as f64 - 1.0).collect();
    assert!(extra.iter().all(|&e| e >= 0.0));
    assert!(data.cells.iter().all(|c| c.count <= c.trials.unwrap()));
    let mean = extra.iter().sum::<f64>() / 900.0;
    // Poisson(4): variance 4.
    assert!((mean - 4.0).abs() < 4.0 * (4.0f64 / 900.0).sqrt(), "mean extra trials {mean}");

    let partial = BinomialSynthesis { obs_fraction: 0.25, trials_mean: 4.0 };
    assert_eq!(simulate_binomial(&lc, &partial, 1, 2).unwrap().0.cells.len(), 225);
}

#[test]
fn vanishing_kernel_variance_gives_fair_coin_labels() {
    let cfg = LogisticPriorConfig { kernel_variance: 1e-12, lengthscale: 1.0, jitter: None, truncation: None };
    let synth = ClassifierSynthesis { n_points: 20, input_dim: 2 };
    let mut ones = 0u32;
    let mut total = 0u32;
    for seed in 0..500 {
        let (data, _) = simulate_classifier(&synth, &cfg, seed, 10_000 + seed).unwrap();
        ones += data.labels.iter().map(|&y| u32::from(y)).sum::<u32>();
        total += data.len() as u32;
    }
    let p = ones as f64 / total as f64;
    assert!((p - 0.5).abs() < 4.0 * (0.25 / total as f64).sqrt(), "label mean {p}");
}

#[test]
fn quadrature_recovers_prior_and_conjugate_moments() {
    let prior = SpectralCovariance::diagonal(vec![2.0, 0.5]).unwrap();
    let m = quadrature_posterior_moments(&PriorOnlyModel::new(prior.clone()), 60).unwrap();
    assert!(max_abs(&m.mean_u) < 1e-6);
    assert!((m.cov_u - prior.covariance_matrix()).abs().max() < 1e-6);

    let prior = SpectralCovariance::diagonal(vec![1.0]).unwrap();
    let model = GaussianObservationModel::new(prior, vec![1.0], 1.0).unwrap();
    let m = quadrature_posterior_moments(&model, 60).unwrap();
    assert!((m.mean_u[0] - 0.5).abs() < 1e-6);
    assert!((m.cov_u[(0, 0)] - 0.5).abs() < 1e-6);

    let big = PriorOnlyModel::new(SpectralCovariance::diagonal(vec![1.0; 4]).unwrap());
    assert!(matches!(quadrature_posterior_moments(&big, 60), Err(Error::Unsupported(_))));
    assert!(quadrature_posterior_moments(&model, 20).is_err());
}

#[test]
fn quadrature_self_converges_on_logistic_oracle() {
    let model = oracle_2d();
    let coarse = quadrature_posterior_moments(&model, 80).unwrap();
    let fine = quadrature_posterior_moments(&model, 160).unwrap();
    let dm: Vec<f64> = coarse.mean_z.iter().zip(&fine.mean_z).map(|(a, b)| a - b).collect();
    assert!(max_abs(&dm) < 1e-4);
    assert!((coarse.cov_z - &fine.cov_z).abs().max() < 1e-4);
    // The data must move the posterior away from the prior for the oracle to be informative.
    assert!(max_abs(&fine.mean_z) > 0.05);
}

#[test]
fn fisher_identity_on_logistic_oracle() {
    let model = oracle_2d();
    let quad = TensorQuadrature::new(&model, 120).unwrap();
    let m = quad.moments().unwrap();
    let grad = quad.expectation(|_, u| model.grad_potential(u)).unwrap();
    // Nodal form on the range of S: P Pᵀ E[∇Φ] + C⁺ m_u.
    let prior = model.prior();
    let p = prior.basis().matrix();
    let proj = &p * p.tr_mul(&DVector::from_column_slice(&grad));
    let c_plus_m = DVector::from_column_slice(&prior.apply_inverse(&m.mean_u).unwrap());
    let residual = (proj + c_plus_m).norm();
    assert!(residual < 1e-3, "nodal residual {residual:e}");
    // Whitened form: E[Sᵀ∇Φ] + E[z] = 0.
    let white = prior.pullback(&grad).unwrap();
    let r: Vec<f64> = white.iter().zip(&m.mean_z).map(|(g, z)| g + z).collect();
    assert!(max_abs(&r) < 1e-3);
}

#[test]
fn classifier_data_validation() {
    assert!(ClassifierData::new(vec![vec![0.0], vec![1.0]], vec![0, 2]).is_err());
    assert!(ClassifierData::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0, 1]).is_err());
    assert!(ClassifierData::new(vec![], vec![]).is_err());
    let data = ClassifierData::new(vec![vec![0.0], vec![1.0]], vec![0, 1]).unwrap();
    let cfg = LogisticPriorConfig { kernel_variance: 1.0, lengthscale: 1.0, jitter: None, truncation: Some(3) };
    assert!(LogisticClassifierModel::new(data, &cfg).is_err());
}
