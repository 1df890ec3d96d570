//! Shared helpers for the integration and acceptance tests: random
//! instances, finite-difference and grid-search checks, and a plain
//! untrimmed proximal-gradient reference written independently of the
//! library solver.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimest::estimator::EstimatorKind;
use trimest::{Dataset, LossKind, LossModel, Parameter, RegKind, Regularizer};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(r: &mut Rng8) -> f64 {
    // Irwin-Hall is fine for test inputs and avoids depending on rand_distr.
    (0..12).map(|_| r.random::<f64>()).sum::<f64>() - 6.0
}

pub fn gauss_matrix(r: &mut Rng8, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gauss(r))
}

/// Random dataset for an estimator, with a few gross outliers.
pub fn random_instance(kind: EstimatorKind, n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x = gauss_matrix(&mut r, n, p);
    let n_out = n / 10;
    match kind {
        EstimatorKind::SparseLts => {
            let beta = DVector::from_fn(p, |i, _| if i < 3.min(p) { 2.0 } else { 0.0 });
            let mut y = &x * &beta + DVector::from_fn(n, |_, _| 0.5 * gauss(&mut r));
            for i in 0..n_out {
                y[i] += 10.0;
            }
            Dataset::regression(x, y).unwrap()
        }
        EstimatorKind::TrimmedLogistic => {
            let beta = DVector::from_fn(p, |i, _| if i < 3.min(p) { 1.5 } else { 0.0 });
            let eta = &x * &beta;
            let mut y = DVector::from_fn(n, |i, _| (r.random::<f64>() < 1.0 / (1.0 + (-eta[i]).exp())) as u8 as f64);
            for i in 0..n_out {
                y[i] = 1.0 - y[i];
            }
            Dataset::regression(x, y).unwrap()
        }
        EstimatorKind::TrimmedGlasso => {
            let mut s = x;
            for i in 0..n_out {
                for j in 0..p {
                    s[(i, j)] += 3.0;
                }
            }
            Dataset::ggm(s).unwrap()
        }
        EstimatorKind::TracenormLts => {
            let q = 4;
            let b = gauss_matrix(&mut r, p, 1) * gauss_matrix(&mut r, 1, q);
            let mut y = &x * b + gauss_matrix(&mut r, n, q) * 0.3;
            for i in 0..n_out {
                for j in 0..q {
                    y[(i, j)] += 8.0;
                }
            }
            Dataset::multi_response(x, y).unwrap()
        }
    }
}

pub const ALL_KINDS: [EstimatorKind; 4] = [
    EstimatorKind::SparseLts,
    EstimatorKind::TrimmedLogistic,
    EstimatorKind::TrimmedGlasso,
    EstimatorKind::TracenormLts,
];

/// Random parameter of the right shape; precision matrices are well
/// conditioned.
pub fn random_parameter(model: &LossModel<'_>, r: &mut Rng8) -> Parameter {
    let (kind, rows, cols) = model.param_shape();
    match kind {
        trimest::ParamKind::Precision => {
            let a = gauss_matrix(r, rows, rows) * 0.3;
            let m = DMatrix::identity(rows, rows) + &a * a.transpose() / rows as f64;
            Parameter::precision((&m + m.transpose()) * 0.5).unwrap()
        }
        trimest::ParamKind::Vector => Parameter::vector(DVector::from_fn(rows, |_, _| 0.3 * gauss(r))),
        trimest::ParamKind::Matrix => Parameter::matrix(gauss_matrix(r, rows, cols) * 0.3),
    }
}

/// Worst relative error between the analytic directional derivative and a
/// central difference, over `dirs` random directions (symmetric ones for
/// precision matrices) and real weights in `[0, 1]`.
pub fn gradient_fd_error(model: &LossModel<'_>, theta: &Parameter, dirs: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = model.n();
    let w: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    let h = w.iter().sum::<f64>().max(1.0);
    let eval = model.evaluate(theta).unwrap();
    let g = model.gradient_real(theta, &eval, &w, h);
    let f = |m: &DMatrix<f64>| {
        let t = match theta.kind() {
            trimest::ParamKind::Precision => Parameter::precision(m.clone()).unwrap(),
            trimest::ParamKind::Vector => Parameter::vector(m.column(0).into_owned()),
            trimest::ParamKind::Matrix => Parameter::matrix(m.clone()),
        };
        model.evaluate(&t).unwrap().smooth_objective_real(&w, h)
    };
    let mut worst: f64 = 0.0;
    for _ in 0..dirs {
        let (rows, cols) = theta.shape();
        let mut d = gauss_matrix(&mut r, rows, cols);
        if theta.kind() == trimest::ParamKind::Precision {
            d = (&d + d.transpose()) * 0.5;
        }
        d /= d.norm();
        let eps = 1e-5;
        let t = theta.values();
        let fd = (f(&(t + &d * eps)) - f(&(t - &d * eps))) / (2.0 * eps);
        let an = g.dot(&d);
        worst = worst.max((fd - an).abs() / an.abs().max(1.0));
    }
    worst
}

/// Coarse-to-fine grid minimisation of a convex function over a box.
pub fn grid_argmin(f: &dyn Fn(&[f64]) -> f64, center: &[f64], mut radius: f64, per_dim: usize) -> Vec<f64> {
    let d = center.len();
    let mut best = center.to_vec();
    while radius > 1e-7 {
        let base = best.clone();
        let mut best_val = f(&best);
        let total = per_dim.pow(d as u32);
        let mut point = vec![0.0; d];
        for idx in 0..total {
            let mut k = idx;
            for j in 0..d {
                let step = k % per_dim;
                k /= per_dim;
                point[j] = base[j] - radius + 2.0 * radius * step as f64 / (per_dim - 1) as f64;
            }
            let v = f(&point);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&point);
            }
        }
        radius *= (6.0 / (per_dim - 1) as f64).min(0.8);
    }
    best
}

/// Worst absolute gap between `prox_matrix` and a grid search of
/// `½‖Z − V‖_F² + ν R(Z)` over random `V` of the given shape.
pub fn prox_grid_error(kind: RegKind, rows: usize, cols: usize, cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let nu = 0.1 + r.random::<f64>();
        let reg = Regularizer::new(kind, nu).unwrap();
        let v = gauss_matrix(&mut r, rows, cols);
        let v = if kind == RegKind::L1OffDiag { (&v + v.transpose()) * 0.5 } else { v };
        let obj = |z: &[f64]| {
            let zm = DMatrix::from_column_slice(rows, cols, z);
            0.5 * (&zm - &v).norm_squared() + nu * reg.value_of(&zm)
        };
        let per_dim = if rows * cols > 2 { 11 } else { 41 };
        let grid = grid_argmin(&obj, v.as_slice(), 4.0, per_dim);
        let prox = reg.prox_matrix(&v, 1.0);
        let gap = prox.iter().zip(&grid).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    worst
}

/// Untrimmed composite objective computed from scratch.
pub fn reference_objective(kind: EstimatorKind, data: &Dataset, lambda: f64, theta: &DMatrix<f64>) -> f64 {
    let n = data.n() as f64;
    match data {
        Dataset::Regression { x, y } => {
            let eta = x * theta.column(0);
            let smooth = match kind.loss() {
                LossKind::Squared => (y - &eta).norm_squared() / (2.0 * n),
                _ => eta
                    .iter()
                    .zip(y.iter())
                    .map(|(e, yi)| if *e > 0.0 { e + (-e).exp().ln_1p() - yi * e } else { e.exp().ln_1p() - yi * e })
                    .sum::<f64>()
                    / n,
            };
            smooth + lambda * theta.iter().map(|v| v.abs()).sum::<f64>()
        }
        Dataset::MultiResponse { x, y } => {
            let sv = theta.clone().svd(false, false).singular_values;
            (x * theta - y).norm_squared() / (2.0 * n) + lambda * sv.sum()
        }
        Dataset::Ggm { samples } => {
            let s = samples.transpose() * samples / n;
            let Some(ch) = theta.clone().cholesky() else { return f64::INFINITY };
            let logdet = 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let mut off = 0.0;
            for i in 0..theta.nrows() {
                for j in 0..theta.ncols() {
                    if i != j {
                        off += theta[(i, j)].abs();
                    }
                }
            }
            (&s * theta).trace() - logdet + lambda * off
        }
    }
}

fn reference_gradient(kind: EstimatorKind, data: &Dataset, theta: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.n() as f64;
    match data {
        Dataset::Regression { x, y } => {
            let eta = x * theta.column(0);
            let r: DVector<f64> = match kind.loss() {
                LossKind::Squared => &eta - y,
                _ => DVector::from_fn(eta.len(), |i, _| 1.0 / (1.0 + (-eta[i]).exp()) - y[i]),
            };
            DMatrix::from_column_slice(theta.nrows(), 1, (x.transpose() * r / n).as_slice())
        }
        Dataset::MultiResponse { x, y } => x.transpose() * (x * theta - y) / n,
        Dataset::Ggm { samples } => {
            let s = samples.transpose() * samples / n;
            let inv = theta.clone().cholesky().unwrap().inverse();
            let g = s - inv;
            (&g + g.transpose()) * 0.5
        }
    }
}

fn reference_prox(kind: EstimatorKind, v: &DMatrix<f64>, nu: f64) -> DMatrix<f64> {
    let soft = |a: f64| a.signum() * (a.abs() - nu).max(0.0);
    match kind.regularizer() {
        RegKind::L1 => v.map(soft),
        RegKind::L1OffDiag => DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| if i == j { v[(i, j)] } else { soft(v[(i, j)]) }),
        RegKind::TraceNorm => {
            let svd = v.clone().svd(true, true);
            let s = svd.singular_values.map(|x| (x - nu).max(0.0));
            svd.u.unwrap() * DMatrix::from_diagonal(&s) * svd.v_t.unwrap()
        }
    }
}

/// Plain proximal gradient with Armijo backtracking on the untrimmed
/// objective, started from `theta0` and run for a fixed budget.
pub fn reference_fit(kind: EstimatorKind, data: &Dataset, lambda: f64, theta0: DMatrix<f64>, iters: usize) -> (DMatrix<f64>, f64) {
    let mut theta = theta0;
    let mut f = reference_objective(kind, data, lambda, &theta);
    let mut step = 1.0;
    for _ in 0..iters {
        let g = reference_gradient(kind, data, &theta);
        let smooth = f - lambda_term(kind, lambda, &theta);
        step *= 2.0;
        loop {
            let cand = reference_prox(kind, &(&theta - &g * step), step * lambda);
            let fc = reference_objective(kind, data, lambda, &cand);
            let d = &cand - &theta;
            let smooth_c = fc - lambda_term(kind, lambda, &cand);
            if smooth_c.is_finite() && smooth_c <= smooth + g.dot(&d) + d.norm_squared() / (2.0 * step) + 1e-15 {
                theta = cand;
                f = fc;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                return (theta, f);
            }
        }
    }
    (theta, f)
}

fn lambda_term(kind: EstimatorKind, lambda: f64, theta: &DMatrix<f64>) -> f64 {
    let r = match kind.regularizer() {
        RegKind::L1 => theta.iter().map(|v| v.abs()).sum::<f64>(),
        RegKind::L1OffDiag => theta.iter().map(|v| v.abs()).sum::<f64>() - theta.diagonal().iter().map(|v| v.abs()).sum::<f64>(),
        RegKind::TraceNorm => theta.clone().svd(false, false).singular_values.sum(),
    };
    lambda * r
}
