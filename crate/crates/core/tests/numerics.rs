mod common;

use approx::assert_relative_eq;
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use trimest::estimator::EstimatorSpec;
use trimest::linalg::{self, CholeskyFactor};
use trimest::{Dataset, RegKind, Regularizer, TrimWeights};

#[test]
fn gradients_match_finite_differences() {
    for (ki, kind) in ALL_KINDS.into_iter().enumerate() {
        for inst in 0..50u64 {
            let mut r = rng(inst * 7 + ki as u64);
            let p = 2 + (inst as usize % 9);
            let data = random_instance(kind, 20, p, 100 * inst + ki as u64);
            let model = EstimatorSpec::new(kind, 0.0).model(&data).unwrap();
            let theta = random_parameter(&model, &mut r);
            let err = gradient_fd_error(&model, &theta, 3, inst);
            assert!(err < 1e-5, "{kind:?} instance {inst}: relative error {err:e}");
        }
    }
}

#[test]
fn weighted_gradient_matches_weighted_objective() {
    for kind in ALL_KINDS {
        let data = random_instance(kind, 25, 4, 11);
        let model = EstimatorSpec::new(kind, 0.0).model(&data).unwrap();
        let reg = Regularizer::new(kind.regularizer(), 0.0).unwrap();
        let mut r = rng(3);
        let theta = random_parameter(&model, &mut r);
        let w = TrimWeights::from_subset(25, &(0..25).filter(|i| i % 3 != 0).collect::<Vec<_>>()).unwrap();
        let g = model.weighted_gradient(&theta, &w).unwrap();
        let (rows, cols) = theta.shape();
        let eps = 1e-6;
        for i in 0..rows {
            for j in 0..cols {
                let mut e = DMatrix::zeros(rows, cols);
                e[(i, j)] = eps;
                if theta.kind() == trimest::ParamKind::Precision {
                    e[(j, i)] = eps;
                }
                let shift = |m: DMatrix<f64>| match theta.kind() {
                    trimest::ParamKind::Precision => trimest::Parameter::precision(m).unwrap(),
                    trimest::ParamKind::Vector => trimest::Parameter::vector(m.column(0).into_owned()),
                    trimest::ParamKind::Matrix => trimest::Parameter::matrix(m),
                };
                let fp = model.weighted_objective(&reg, &shift(theta.values() + &e), &w).unwrap();
                let fm = model.weighted_objective(&reg, &shift(theta.values() - &e), &w).unwrap();
                let fd = (fp - fm) / (2.0 * eps);
                let an = if theta.kind() == trimest::ParamKind::Precision && i != j {
                    g[(i, j)] + g[(j, i)]
                } else {
                    g[(i, j)]
                };
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{kind:?} ({i},{j}): fd {fd} vs {an}");
            }
        }
    }
}

#[test]
fn prox_matches_grid_search() {
    let cases = [
        (RegKind::L1, 1, 1),
        (RegKind::L1, 2, 1),
        (RegKind::L1, 1, 2),
        (RegKind::L1OffDiag, 1, 1),
        (RegKind::L1OffDiag, 2, 2),
        (RegKind::TraceNorm, 1, 1),
        (RegKind::TraceNorm, 2, 1),
        (RegKind::TraceNorm, 1, 2),
    ];
    for (i, (kind, r, c)) in cases.into_iter().enumerate() {
        let gap = prox_grid_error(kind, r, c, 10, 40 + i as u64);
        assert!(gap < 1e-4, "{kind:?} {r}x{c}: gap {gap:e}");
    }
}

#[test]
fn trace_norm_prox_beats_grid_on_square_matrices() {
    let mut r = rng(9);
    for _ in 0..10 {
        let v = gauss_matrix(&mut r, 2, 2);
        let nu = 0.2 + 0.6 * rand::Rng::random::<f64>(&mut r);
        let reg = Regularizer::new(RegKind::TraceNorm, nu).unwrap();
        let obj = |z: &[f64]| {
            let zm = DMatrix::from_column_slice(2, 2, z);
            0.5 * (&zm - &v).norm_squared() + nu * reg.value_of(&zm)
        };
        let grid = grid_argmin(&obj, v.as_slice(), 4.0, 11);
        let prox = reg.prox_matrix(&v, 1.0);
        assert!(obj(prox.as_slice()) <= obj(&grid) + 1e-12);
    }
}

#[test]
fn spectral_norm_matches_power_iteration() {
    let mut r = rng(5);
    for _ in 0..10 {
        let m = gauss_matrix(&mut r, 6, 4);
        let mut v = DVector::from_element(4, 1.0);
        for _ in 0..2000 {
            v = m.transpose() * (&m * &v);
            v /= v.norm();
        }
        let power = (&m * &v).norm();
        assert_relative_eq!(linalg::spectral_norm(&m), power, max_relative = 1e-10);
    }
}

#[test]
fn glasso_without_penalty_recovers_inverse_covariance() {
    let data = random_instance(trimest::estimator::EstimatorKind::TrimmedGlasso, 200, 5, 8);
    let s = data.second_moment();
    let spec = EstimatorSpec::new(trimest::estimator::EstimatorKind::TrimmedGlasso, 0.0);
    let fit = trimest::estimator::fit(&spec, &data).unwrap();
    let inv = CholeskyFactor::new(&s).unwrap().inverse();
    assert!((fit.theta.values() - inv).amax() < 1e-6);
}

#[test]
fn lts_without_penalty_at_full_h_is_least_squares() {
    let data = random_instance(trimest::estimator::EstimatorKind::SparseLts, 60, 5, 21);
    let Dataset::Regression { x, y } = &data else { unreachable!() };
    let ols = (x.transpose() * x).lu().solve(&(x.transpose() * y)).unwrap();
    let spec = EstimatorSpec::new(trimest::estimator::EstimatorKind::SparseLts, 0.0);
    let fit = trimest::estimator::fit(&spec, &data).unwrap();
    assert!((fit.theta.as_vector() - ols).amax() < 1e-6);
}

fn spd(seed: u64, p: usize) -> DMatrix<f64> {
    let mut r = rng(seed);
    let a = gauss_matrix(&mut r, p, p);
    linalg::symmetrize(&(&a * a.transpose() + DMatrix::identity(p, p) * 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logdet_matches_eigenvalues(seed in 0u64..10_000, p in 1usize..7) {
        let m = spd(seed, p);
        let (_, logdet) = linalg::cholesky_logdet(&m).unwrap();
        let eig: f64 = linalg::symmetric_eigenvalues(&m).iter().map(|v| v.ln()).sum();
        prop_assert!((logdet - eig).abs() <= 1e-8 * eig.abs().max(1.0));
    }

    #[test]
    fn prox_is_nonexpansive(seed in 0u64..10_000, kind_idx in 0usize..3, nu in 0.0f64..2.0) {
        let kind = [RegKind::L1, RegKind::L1OffDiag, RegKind::TraceNorm][kind_idx];
        let reg = Regularizer::new(kind, nu).unwrap();
        let mut r = rng(seed);
        let a = gauss_matrix(&mut r, 4, 4);
        let b = gauss_matrix(&mut r, 4, 4);
        let pa = reg.prox_matrix(&a, 1.0);
        let pb = reg.prox_matrix(&b, 1.0);
        prop_assert!((pa - pb).norm() <= (a - b).norm() + 1e-12);
    }
}
