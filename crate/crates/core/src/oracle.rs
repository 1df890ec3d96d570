//! Exact global minimization of a trimmed objective on small instances by
//! enumerating every `h`-subset of samples.

use crate::error::{Error, Result};
use crate::estimator::{self, EstimatorSpec};
use crate::exec;
use crate::linalg::{CholeskyFactor, Matrix};
use crate::model::{Dataset, LossKind, Parameter};
use crate::solver::{self, FitResult};
use crate::trim::TrimWeights;

pub const DEFAULT_SUBSET_LIMIT: u128 = 5000;
const TIE_GAP: f64 = 1e-10;
const RIDGE_JITTER: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub best_subset: Vec<usize>,
    pub best_theta: Parameter,
    pub best_objective: f64,
    /// Every subset, in colexicographic order.
    pub subsets: Vec<Vec<usize>>,
    pub per_subset_objectives: Vec<f64>,
    /// Other subsets whose objective is within `1e-10` of the best.
    pub degenerate: Vec<Vec<usize>>,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All `k`-subsets of `0..n` in colexicographic order.
pub fn colex_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut j = 0;
        while j < k {
            let next = if j + 1 < k { c[j + 1] } else { n };
            if c[j] + 1 < next {
                break;
            }
            j += 1;
        }
        if j == k {
            break;
        }
        c[j] += 1;
        for (i, slot) in c.iter_mut().enumerate().take(j) {
            *slot = i;
        }
    }
    out
}

/// Minimizer of the convex problem restricted to `subset`.
///
/// Unpenalized squared loss is solved in closed form through the normal
/// equations; everything else runs the fixed-weight proximal gradient
/// solver with tolerances 100× tighter than `spec.solver`.
pub fn solve_subset(spec: &EstimatorSpec, data: &Dataset, subset: &[usize]) -> Result<Parameter> {
    let w = TrimWeights::from_subset(data.n(), subset)?;
    if spec.kind.loss() == LossKind::Squared && spec.lambda == 0.0 {
        return normal_equations(data, subset);
    }
    let model = spec.model(data)?;
    let reg = spec.regularizer()?;
    let theta0 = estimator::initial_theta(spec, data)?;
    let cfg = spec.solver.tightened(100.0);
    Ok(solver::fit_fixed_weights(&model, &reg, &w, &theta0, &cfg)?.theta)
}

fn normal_equations(data: &Dataset, subset: &[usize]) -> Result<Parameter> {
    let sub = data.select_rows(subset);
    let x = sub.design();
    let p = x.ncols();
    let gram = x.tr_mul(x);
    let chol = CholeskyFactor::new(&gram)
        .or_else(|_| CholeskyFactor::new(&(&gram + Matrix::identity(p, p) * RIDGE_JITTER)))?;
    Ok(match &sub {
        Dataset::Regression { y, .. } => {
            let rhs = x.tr_mul(&Matrix::from_column_slice(y.len(), 1, y.as_slice()));
            Parameter::vector(chol.solve(&rhs).column(0).into_owned())
        }
        Dataset::MultiResponse { y, .. } => Parameter::matrix(chol.solve(&x.tr_mul(y))),
        Dataset::Ggm { .. } => unreachable!("squared loss never sees GGM data"),
    })
}

/// Enumerates every `h`-subset, solves each subproblem and returns the
/// global minimum of the trimmed objective.
pub fn enumerate_global(spec: &EstimatorSpec, data: &Dataset, subset_limit: u128) -> Result<OracleResult> {
    let n = data.n();
    let h = spec.trim.resolve(n)?;
    let count = binomial(n, h);
    if count > subset_limit {
        return Err(Error::TooManySubsets { count, limit: subset_limit });
    }
    let model = spec.model(data)?;
    let reg = spec.regularizer()?;
    let subsets = colex_subsets(n, h);

    let solved: Vec<Result<(Parameter, f64)>> = exec::map_slice(&subsets, |s| {
        let theta = solve_subset(spec, data, s)?;
        let w = TrimWeights::from_subset(n, s)?;
        let f = model.weighted_objective(&reg, &theta, &w)?;
        Ok((theta, f))
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, (_, f)) in solved.iter().enumerate() {
        if *f < solved[best].1 {
            best = i;
        }
    }
    let best_objective = solved[best].1;
    let degenerate = solved
        .iter()
        .enumerate()
        .filter(|(i, (_, f))| *i != best && f - best_objective < TIE_GAP)
        .map(|(i, _)| subsets[i].clone())
        .collect();
    let per_subset_objectives = solved.iter().map(|(_, f)| *f).collect();
    let best_theta = solved[best].0.clone();

    Ok(OracleResult {
        best_subset: subsets[best].clone(),
        best_theta,
        best_objective,
        per_subset_objectives,
        degenerate,
        subsets,
    })
}

/// Runs the partial-minimization solver from the subproblem solution of
/// every `h`-subset and returns the fit with the lowest objective.
pub fn vertex_multistart(spec: &EstimatorSpec, data: &Dataset, subset_limit: u128) -> Result<FitResult> {
    let n = data.n();
    let h = spec.trim.resolve(n)?;
    let count = binomial(n, h);
    if count > subset_limit {
        return Err(Error::TooManySubsets { count, limit: subset_limit });
    }
    let subsets = colex_subsets(n, h);
    let fits: Vec<Result<FitResult>> = exec::map_slice(&subsets, |s| {
        let theta0 = solve_subset(spec, data, s)?;
        estimator::fit_from(spec, data, &theta0)
    });
    let mut best: Option<FitResult> = None;
    for f in fits {
        let f = f?;
        if best.as_ref().map_or(true, |b| f.objective() < b.objective()) {
            best = Some(f);
        }
    }
    Ok(best.expect("at least one subset"))
}
