//! Estimator facades, cross-validation over `(λ, h)`, and warm-started
//! λ paths.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, CholeskyFactor, Matrix};
use crate::model::{Dataset, LossKind, LossModel, Parameter, RegKind, Regularizer};
use crate::solver::{self, FitResult, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    SparseLts,
    TrimmedLogistic,
    TrimmedGlasso,
    TracenormLts,
}

impl EstimatorKind {
    pub fn loss(self) -> LossKind {
        match self {
            Self::SparseLts | Self::TracenormLts => LossKind::Squared,
            Self::TrimmedLogistic => LossKind::Logistic,
            Self::TrimmedGlasso => LossKind::GaussianLoglik,
        }
    }

    pub fn regularizer(self) -> RegKind {
        match self {
            Self::SparseLts | Self::TrimmedLogistic => RegKind::L1,
            Self::TrimmedGlasso => RegKind::L1OffDiag,
            Self::TracenormLts => RegKind::TraceNorm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SparseLts => "sparse_lts",
            Self::TrimmedLogistic => "trimmed_logistic",
            Self::TrimmedGlasso => "trimmed_glasso",
            Self::TracenormLts => "tracenorm_lts",
        }
    }

    pub fn check_data(self, data: &Dataset) -> Result<()> {
        let ok = matches!(
            (self, data),
            (Self::SparseLts | Self::TrimmedLogistic, Dataset::Regression { .. })
                | (Self::TrimmedGlasso, Dataset::Ggm { .. })
                | (Self::TracenormLts, Dataset::MultiResponse { .. })
        );
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatibleData(format!("{} needs a different dataset kind", self.name())))
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse_lts" => Ok(Self::SparseLts),
            "trimmed_logistic" => Ok(Self::TrimmedLogistic),
            "trimmed_glasso" => Ok(Self::TrimmedGlasso),
            "tracenorm_lts" => Ok(Self::TracenormLts),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}

/// How many samples to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Trim {
    /// Keep exactly `h` samples.
    Count(usize),
    /// Fraction of samples trimmed; keeps `n − ⌊fraction·n⌋`.
    Fraction(f64),
}

impl Trim {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let h = match self {
            Self::Count(h) => h,
            Self::Fraction(f) => {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::InvalidArgument(format!("trim fraction must lie in [0,1), got {f}")));
                }
                n - (f * n as f64).floor() as usize
            }
        };
        if h < 1 || h > n {
            return Err(Error::InvalidH { h, n });
        }
        Ok(h)
    }
}

/// Starting point of a trimmed fit. The graphical lasso always starts from
/// `(S + λI)⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Start {
    Zero,
    /// The untrimmed (`h = n`) solution at the same λ, itself started at
    /// zero. Its largest residuals then seed the first trim.
    #[default]
    Untrimmed,
}

impl FromStr for Start {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "untrimmed" => Ok(Self::Untrimmed),
            other => Err(Error::InvalidArgument(format!("unknown start `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub lambda: f64,
    pub trim: Trim,
    pub radius: f64,
    pub start: Start,
    pub solver: SolverConfig,
}

impl EstimatorSpec {
    /// Untrimmed (`h = n`) estimator with default solver settings.
    pub fn new(kind: EstimatorKind, lambda: f64) -> Self {
        Self {
            kind,
            lambda,
            trim: Trim::Fraction(0.0),
            radius: f64::INFINITY,
            start: Start::default(),
            solver: SolverConfig::default(),
        }
    }

    pub fn with_trim(mut self, trim: Trim) -> Self {
        self.trim = trim;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn regularizer(&self) -> Result<Regularizer> {
        Regularizer::with_radius(self.kind.regularizer(), self.lambda, self.radius)
    }

    pub fn model<'a>(&self, data: &'a Dataset) -> Result<LossModel<'a>> {
        self.kind.check_data(data)?;
        LossModel::new(self.kind.loss(), data)
    }
}

/// Default starting point: `(S + λI)⁻¹` for the graphical lasso with `I` as
/// fallback; otherwise zero, or the untrimmed fit when trimming under
/// [`Start::Untrimmed`].
pub fn initial_theta(spec: &EstimatorSpec, data: &Dataset) -> Result<Parameter> {
    let model = spec.model(data)?;
    if spec.kind != EstimatorKind::TrimmedGlasso {
        let zero = model.zero_parameter();
        if spec.start == Start::Zero || spec.trim.resolve(data.n())? == data.n() {
            return Ok(zero);
        }
        let reg = spec.regularizer()?;
        return Ok(solver::fit_partial_min(&model, &reg, data.n(), &zero, &spec.solver)?.theta);
    }
    let p = data.p();
    let shifted = data.second_moment() + Matrix::identity(p, p) * spec.lambda;
    let init = CholeskyFactor::new(&shifted)
        .map(|c| c.inverse())
        .and_then(Parameter::precision);
    Ok(init.unwrap_or_else(|_| model.zero_parameter()))
}

pub fn fit(spec: &EstimatorSpec, data: &Dataset) -> Result<FitResult> {
    let theta0 = initial_theta(spec, data)?;
    fit_from(spec, data, &theta0)
}

pub fn fit_from(spec: &EstimatorSpec, data: &Dataset, theta0: &Parameter) -> Result<FitResult> {
    let model = spec.model(data)?;
    let reg = spec.regularizer()?;
    let h = spec.trim.resolve(data.n())?;
    solver::fit_partial_min(&model, &reg, h, theta0, &spec.solver)
}

/// Same problem solved by full alternating minimization.
pub fn fit_alternate(spec: &EstimatorSpec, data: &Dataset, inner: &SolverConfig) -> Result<FitResult> {
    let model = spec.model(data)?;
    let reg = spec.regularizer()?;
    let h = spec.trim.resolve(data.n())?;
    let theta0 = initial_theta(spec, data)?;
    solver::fit_alternate_min(&model, &reg, h, &theta0, &spec.solver, inner)
}

/// Fits along a descending λ grid, warm-starting each fit from the previous
/// solution.
pub fn lambda_path(spec: &EstimatorSpec, data: &Dataset, grid: &[f64]) -> Result<Vec<FitResult>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    if grid.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("lambda grid must be sorted descending".into()));
    }
    let mut out: Vec<FitResult> = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let s = spec.clone().with_lambda(lambda);
        let theta0 = match out.last() {
            Some(prev) => prev.theta.clone(),
            None => initial_theta(&s, data)?,
        };
        out.push(fit_from(&s, data, &theta0)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scoring {
    /// Mean squared residual over held-out samples after dropping the
    /// largest ones.
    TrimmedMse,
    /// Logistic deviance, trimmed the same way.
    Deviance,
    /// Negative Gaussian log-likelihood per sample, trimmed the same way.
    HeldoutLoglik,
}

impl FromStr for Scoring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trimmed_mse" => Ok(Self::TrimmedMse),
            "deviance" => Ok(Self::Deviance),
            "heldout_loglik" => Ok(Self::HeldoutLoglik),
            other => Err(Error::InvalidArgument(format!("unknown scoring `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvPlan {
    pub lambda_grid: Vec<f64>,
    pub h_grid: Vec<usize>,
    pub folds: usize,
    pub scoring: Scoring,
    pub seed: u64,
}

impl CvPlan {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.lambda_grid.is_empty() || self.h_grid.is_empty() {
            return Err(Error::InvalidArgument("cross-validation grids must be non-empty".into()));
        }
        if self.folds < 2 || self.folds > n {
            return Err(Error::InvalidArgument(format!("folds must lie in [2, n], got {}", self.folds)));
        }
        if let Some(&h) = self.h_grid.iter().find(|&&h| h < 1 || h > n) {
            return Err(Error::InvalidH { h, n });
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(**l >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative lambda {l}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvCell {
    pub lambda: f64,
    pub h: usize,
    pub score: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    pub best_lambda: f64,
    pub best_h: usize,
    /// One cell per `(λ, h)`, λ-major in grid order.
    pub table: Vec<CvCell>,
}

/// Seeded fold assignment: a shuffled permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in order.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

/// Per-sample held-out losses under a scoring rule.
fn heldout_losses(scoring: Scoring, theta: &Parameter, test: &Dataset) -> Result<Vec<f64>> {
    match (scoring, test) {
        (Scoring::TrimmedMse, Dataset::Regression { .. } | Dataset::MultiResponse { .. }) => {
            let m = LossModel::new(LossKind::Squared, test)?;
            Ok(m.evaluate(theta)?.losses.into_iter().map(|l| 2.0 * l).collect())
        }
        (Scoring::Deviance, Dataset::Regression { .. }) => {
            let m = LossModel::new(LossKind::Logistic, test)?;
            Ok(m.evaluate(theta)?.losses.into_iter().map(|l| 2.0 * l).collect())
        }
        (Scoring::HeldoutLoglik, Dataset::Ggm { samples }) => {
            let m = LossModel::new(LossKind::GaussianLoglik, test)?;
            let e = m.evaluate(theta)?;
            let c = samples.ncols() as f64 * (2.0 * std::f64::consts::PI).ln();
            Ok(e.losses.into_iter().map(|q| 0.5 * (q + e.shared + c)).collect())
        }
        _ => Err(Error::IncompatibleData(format!("{scoring:?} scoring does not apply to this dataset"))),
    }
}

/// Mean of `losses` after dropping the `⌈(1 − keep)·len⌉` largest.
pub fn trimmed_mean(losses: &[f64], keep_fraction: f64) -> f64 {
    let m = losses.len();
    let drop = ((1.0 - keep_fraction) * m as f64 - 1e-9).ceil().max(0.0) as usize;
    let kept = m.saturating_sub(drop).max(1).min(m);
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[..kept].iter().sum::<f64>() / kept as f64
}

/// k-fold cross-validation over every `(λ, h)` pair. Cells are evaluated
/// independently (in parallel when enabled); the table order and the
/// selected pair do not depend on completion order. Ties go to the earliest
/// cell.
pub fn cross_validate(template: &EstimatorSpec, plan: &CvPlan, data: &Dataset) -> Result<CvOutcome> {
    let n = data.n();
    plan.validate(n)?;
    template.kind.check_data(data)?;
    let folds = fold_assignment(n, plan.folds, plan.seed);

    let cells: Vec<(f64, usize)> = plan
        .lambda_grid
        .iter()
        .flat_map(|&l| plan.h_grid.iter().map(move |&h| (l, h)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..plan.folds).map(move |f| (c, f)))
        .collect();

    let scores: Vec<Result<f64>> = exec::map_slice(&jobs, |&(c, f)| {
        let (lambda, h) = cells[c];
        let test_idx = &folds[f];
        let train_idx: Vec<usize> = (0..n).filter(|i| test_idx.binary_search(i).is_err()).collect();
        let train = data.select_rows(&train_idx);
        let test = data.select_rows(test_idx);
        let keep = h as f64 / n as f64;
        let h_train = ((keep * train_idx.len() as f64).round() as usize).clamp(1, train_idx.len());
        let spec = template.clone().with_lambda(lambda).with_trim(Trim::Count(h_train));
        let fitres = fit(&spec, &train)?;
        let losses = heldout_losses(plan.scoring, &fitres.theta, &test)?;
        Ok(trimmed_mean(&losses, keep))
    });

    let mut table = Vec::with_capacity(cells.len());
    let mut it = scores.into_iter();
    for &(lambda, h) in &cells {
        let fold_scores = (0..plan.folds).map(|_| it.next().expect("one score per job")).collect::<Result<Vec<_>>>()?;
        let score = fold_scores.iter().sum::<f64>() / plan.folds as f64;
        table.push(CvCell { lambda, h, score, fold_scores });
    }
    let best = table
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.score.total_cmp(&b.1.score).then(a.0.cmp(&b.0)))
        .map(|(_, c)| c)
        .expect("non-empty grid");
    Ok(CvOutcome {
        best_lambda: best.lambda,
        best_h: best.h,
        table,
    })
}

/// Smallest λ at which the zero (or diagonal) solution is stationary for
/// the untrimmed problem; a natural top for λ grids.
pub fn lambda_max(kind: EstimatorKind, data: &Dataset) -> Result<f64> {
    let spec = EstimatorSpec::new(kind, 0.0);
    let model = spec.model(data)?;
    let reg = spec.regularizer()?;
    let theta = match kind {
        EstimatorKind::TrimmedGlasso => {
            let s = data.second_moment();
            let d = Matrix::from_diagonal(&s.diagonal().map(|v| 1.0 / v.max(1e-12)));
            Parameter::precision(d)?
        }
        _ => model.zero_parameter(),
    };
    let g = model.weighted_gradient(&theta, &crate::trim::TrimWeights::full(data.n()))?;
    Ok(reg.dual_norm(&g))
}

/// Log-spaced descending grid from `hi` to `hi·ratio`.
pub fn log_grid(hi: f64, ratio: f64, len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![hi];
    }
    (0..len)
        .map(|i| hi * ratio.powf(i as f64 / (len - 1) as f64))
        .collect()
}

/// Diagonal precision `diag(1/S_w,ii)` over the selected samples; the
/// graphical lasso solution once λ zeroes every off-diagonal entry.
pub fn diagonal_precision(data: &Dataset, weights: &crate::trim::TrimWeights) -> Matrix {
    let x = data.design();
    let p = x.ncols();
    let mut d = Matrix::zeros(p, p);
    for j in 0..p {
        let s: f64 = weights.indices().map(|i| x[(i, j)] * x[(i, j)]).sum::<f64>() / weights.h() as f64;
        d[(j, j)] = 1.0 / s;
    }
    linalg::symmetrize(&d)
}
