use std::sync::Arc;

use infdim_core::gaussian::{
    cameron_martin_norm_sq, change_of_measure_logterm, equivalence_diagnostic, sample_prior, BasisMap, CosineBasis,
    DiagonalScaling, GaussianMeasure, SpectralCovariance,
};
use infdim_core::rng::{chain_rng, standard_normals};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn random_orthonormal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = chain_rng(seed);
    let a = DMatrix::from_vec(n, n, standard_normals(&mut rng, n * n));
    a.qr().q()
}

fn decreasing(n: usize) -> Vec<f64> {
    (0..n).map(|k| 3.0 / (1.0 + k as f64).powi(2)).collect()
}

fn dense_cov(n: usize, seed: u64) -> SpectralCovariance {
    SpectralCovariance::new(decreasing(n), BasisMap::Dense(random_orthonormal(n, seed))).unwrap()
}

fn cosine_cov(n1: usize, n2: usize) -> SpectralCovariance {
    let basis = CosineBasis::new(n1, n2);
    let eigs = basis.laplacian_eigenvalues().iter().map(|l| 1.0 / (1.0 + l).powi(2)).collect();
    SpectralCovariance::new(eigs, BasisMap::Cosine(basis)).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

#[test]
fn diagonal_examples_map_both_ways() {
    let cov = SpectralCovariance::diagonal(vec![4.0, 1.0]).unwrap();
    assert_eq!(cov.to_coefficients(&[2.0, 3.0]).unwrap(), vec![1.0, 3.0]);
    assert_eq!(cov.from_coefficients(&[1.0, 3.0]).unwrap(), vec![2.0, 3.0]);
    assert_eq!(cov.to_coefficients(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    assert!(cov.to_coefficients(&[1.0]).is_err());
    assert!(cov.from_coefficients(&[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn round_trips_at_n8() {
    let mut rng = chain_rng(11);
    for cov in [dense_cov(8, 1), cosine_cov(2, 4)] {
        for _ in 0..100 {
            let u = standard_normals(&mut rng, 8);
            let back = cov.from_coefficients(&cov.to_coefficients(&u).unwrap()).unwrap();
            assert!(rel_err(&back, &u) < 1e-10);
            let z = standard_normals(&mut rng, 8);
            let back = cov.to_coefficients(&cov.from_coefficients(&z).unwrap()).unwrap();
            assert!(rel_err(&back, &z) < 1e-10);
        }
    }
}

#[test]
fn cosine_basis_is_orthonormal() {
    for (n1, n2) in [(1, 1), (3, 5), (8, 8), (4, 7)] {
        let basis = BasisMap::Cosine(CosineBasis::new(n1, n2));
        let p = basis.matrix();
        let gram = p.tr_mul(&p);
        let err = (gram - DMatrix::<f64>::identity(n1 * n2, n1 * n2)).abs().max();
        assert!(err < 1e-12, "{n1}x{n2}: {err}");
        let mut rng = chain_rng(3);
        let z = standard_normals(&mut rng, n1 * n2);
        assert!(rel_err(&basis.project(&basis.embed(&z)), &z) < 1e-10);
    }
}

#[test]
fn truncated_cosine_basis_keeps_smoothest_modes() {
    let basis = CosineBasis::truncated(6, 6, 10);
    let lam = basis.laplacian_eigenvalues();
    assert_eq!(lam.len(), 10);
    assert!(lam.windows(2).all(|w| w[0] <= w[1]));
    let full = CosineBasis::new(6, 6);
    assert_eq!(&full.laplacian_eigenvalues()[..10], lam);
    let map = BasisMap::Cosine(basis);
    let p = map.matrix();
    let err = (p.tr_mul(&p) - DMatrix::<f64>::identity(10, 10)).abs().max();
    assert!(err < 1e-12);
}

#[test]
fn sqrt_matrix_agrees_with_operators() {
    let cov = cosine_cov(3, 4);
    let s = cov.sqrt_matrix();
    let mut rng = chain_rng(5);
    let z = standard_normals(&mut rng, 12);
    let dense = s * nalgebra::DVector::from_column_slice(&z);
    assert!(rel_err(&cov.from_coefficients(&z).unwrap(), dense.as_slice()) < 1e-12);
    let c = cov.covariance_matrix();
    let direct = s * s.transpose();
    assert!((c - direct).abs().max() < 1e-12);
}

fn moment_check(scaling: Option<Vec<f64>>, n: usize) {
    let cov = Arc::new(SpectralCovariance::diagonal(vec![1.0; n]).unwrap());
    let d = scaling.clone().unwrap_or(vec![1.0; n]);
    let measure = GaussianMeasure::new(vec![0.0; n], cov, scaling.map(|s| DiagonalScaling::new(s).unwrap())).unwrap();
    let mut rng = chain_rng(17);
    let draws = 100_000;
    let mut sum = vec![0.0; n];
    let mut cross = DMatrix::<f64>::zeros(n, n);
    for _ in 0..draws {
        let z = sample_prior(&measure, &mut rng);
        for i in 0..n {
            sum[i] += z[i];
            for j in 0..n {
                cross[(i, j)] += z[i] * z[j];
            }
        }
    }
    let nf = draws as f64;
    for i in 0..n {
        for j in 0..n {
            let c = cross[(i, j)] / nf - sum[i] * sum[j] / (nf * nf);
            // Var of a sample covariance entry: d_i d_j (1 + δ_ij) / n.
            let se = (d[i] * d[j] * if i == j { 2.0 } else { 1.0 } / nf).sqrt();
            let expect = if i == j { d[i] } else { 0.0 };
            assert!((c - expect).abs() < 4.0 * se, "entry ({i},{j}) = {c}");
            if i == j {
                assert!((c / d[i] - 1.0).abs() < 0.05);
            }
        }
    }
}

#[test]
fn sample_prior_identity_moments() {
    moment_check(None, 4);
}

#[test]
fn sample_prior_scaled_moments() {
    moment_check(Some(vec![4.0, 1.0, 1.0, 1.0]), 4);
    moment_check(Some(vec![2.0, 0.5, 1.5, 1.0, 0.2, 3.0, 1.0, 0.7]), 8);
}

#[test]
fn sample_prior_is_deterministic() {
    let cov = Arc::new(dense_cov(5, 2));
    let measure = GaussianMeasure::prior(cov);
    assert_eq!(sample_prior(&measure, &mut chain_rng(9)), sample_prior(&measure, &mut chain_rng(9)));
}

#[test]
fn diagnostic_examples() {
    let d = |v: Vec<f64>| DiagonalScaling::new(v).unwrap();
    assert_eq!(equivalence_diagnostic(&d(vec![1.0; 6])), 0.0);
    assert_eq!(equivalence_diagnostic(&d(vec![2.0, 1.0, 1.0])), 1.0);
    assert_eq!(equivalence_diagnostic(&d(vec![1.5, 0.5, 1.0, 1.0])), 0.5);
    assert_eq!(change_of_measure_logterm(&[2.0], &d(vec![2.0])).unwrap(), 1.0);
    assert_eq!(cameron_martin_norm_sq(&[0.0, 0.0], &d(vec![1.0, 1.0])).unwrap(), 0.0);
    assert_eq!(cameron_martin_norm_sq(&[3.0, 4.0], &d(vec![1.0, 1.0])).unwrap(), 25.0);
    assert_eq!(cameron_martin_norm_sq(&[2.0, 0.0], &d(vec![4.0, 1.0])).unwrap(), 1.0);
}

#[test]
fn logterm_matches_dense_quadratic_form() {
    let mut rng = chain_rng(23);
    for n in [1, 3, 10] {
        let z = standard_normals(&mut rng, n);
        let d: Vec<f64> = standard_normals(&mut rng, n).iter().map(|x| x.exp()).collect();
        let lam_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, d.iter().map(|v| 1.0 / v)));
        let zv = nalgebra::DVector::from_column_slice(&z);
        let dense = 0.5 * (zv.transpose() * (DMatrix::identity(n, n) - lam_inv) * &zv)[(0, 0)];
        let fast = change_of_measure_logterm(&z, &DiagonalScaling::new(d).unwrap()).unwrap();
        assert!((dense - fast).abs() < 1e-12 * (1.0 + dense.abs()));
    }
}

proptest! {
    #[test]
    fn dense_round_trip(seed in 0u64..1000, n in 1usize..12) {
        let cov = dense_cov(n, seed);
        let u = standard_normals(&mut chain_rng(seed + 1), n);
        let back = cov.from_coefficients(&cov.to_coefficients(&u).unwrap()).unwrap();
        prop_assert!(rel_err(&back, &u) < 1e-10);
        let z = cov.basis().project(&cov.basis().embed(&u));
        prop_assert!(rel_err(&z, &u) < 1e-10);
    }

    #[test]
    fn cosine_round_trip(seed in 0u64..1000, n1 in 1usize..7, n2 in 1usize..7) {
        let cov = cosine_cov(n1, n2);
        let u = standard_normals(&mut chain_rng(seed), n1 * n2);
        let back = cov.from_coefficients(&cov.to_coefficients(&u).unwrap()).unwrap();
        prop_assert!(rel_err(&back, &u) < 1e-10);
    }

    #[test]
    fn logterm_vanishes_at_identity(z in prop::collection::vec(-1e6f64..1e6, 1..20)) {
        let s = DiagonalScaling::identity(z.len());
        prop_assert_eq!(change_of_measure_logterm(&z, &s).unwrap(), 0.0);
    }

    #[test]
    fn diagnostic_is_permutation_invariant(
        d in prop::collection::vec(0.01f64..10.0, 1..20),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut p = d.clone();
        p.shuffle(&mut chain_rng(seed));
        let a = equivalence_diagnostic(&DiagonalScaling::new(d).unwrap());
        let b = equivalence_diagnostic(&DiagonalScaling::new(p).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }
}
