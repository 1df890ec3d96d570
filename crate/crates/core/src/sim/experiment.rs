//! Replicated simulation runs with per-replication derived seeds.
//!
//! Row CSV columns, in order:
//! `replication,method,lambda_index,lambda,h,l2_error,l1_error,frobenius_error,offdiag_l1_error,tpr,fpr,trimmed_mse,iterations,converged,objective`
//!
//! Summary CSV columns, in order:
//! `method,lambda_index,mean_lambda,h,mean_l2_error,mean_l1_error,mean_frobenius_error,mean_offdiag_l1_error,mean_tpr,mean_fpr,mean_auc`
//!
//! Wall-clock timings go to a separate file so the two files above are
//! byte-reproducible for a fixed seed.

use std::io::Write;
use std::time::Instant;

use super::generate::{generate, Scenario};
use super::metrics::{roc_auc, score, MetricsReport, DEFAULT_SUPPORT_THRESHOLD};
use super::rng::derive_seed;
use crate::error::{Error, Result};
use crate::estimator::{self, trimmed_mean, EstimatorSpec};
use crate::exec;
use crate::io::fmt_f64;
use crate::model::{Dataset, LossKind, LossModel};

/// λ values for one method.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaGrid {
    Fixed(Vec<f64>),
    /// `len` log-spaced values from the data-dependent λ_max down to
    /// `ratio·λ_max`.
    Relative { ratio: f64, len: usize },
}

impl LambdaGrid {
    pub fn len(&self) -> usize {
        match self {
            Self::Fixed(v) => v.len(),
            Self::Relative { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn resolve(&self, spec: &EstimatorSpec, data: &Dataset) -> Result<Vec<f64>> {
        match self {
            Self::Fixed(v) => Ok(v.clone()),
            Self::Relative { ratio, len } => {
                let hi = estimator::lambda_max(spec.kind, data)?;
                Ok(estimator::log_grid(hi, *ratio, *len))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub template: EstimatorSpec,
    pub lambdas: LambdaGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub replication: usize,
    pub method: usize,
    pub lambda_index: usize,
    pub lambda: f64,
    pub h: usize,
    pub metrics: MetricsReport,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryPoint {
    pub lambda_index: usize,
    pub mean_lambda: f64,
    pub h: usize,
    pub mean_l2_error: f64,
    pub mean_l1_error: f64,
    pub mean_frobenius_error: f64,
    pub mean_offdiag_l1_error: f64,
    pub mean_tpr: f64,
    pub mean_fpr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub name: String,
    pub points: Vec<SummaryPoint>,
    /// ROC AUC of each replication's λ path.
    pub per_replication_auc: Vec<f64>,
    pub mean_auc: f64,
    /// Pointwise-averaged ROC, one `(fpr, tpr)` per grid position.
    pub mean_roc: Vec<(f64, f64)>,
}

impl MethodSummary {
    /// Smallest mean ℓ2 error over the λ grid and its grid index.
    pub fn best_l2(&self) -> (usize, f64) {
        self.points
            .iter()
            .map(|p| (p.lambda_index, p.mean_l2_error))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("non-empty grid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Timing {
    pub replication: usize,
    pub method: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub methods: Vec<MethodSummary>,
    pub timings: Vec<Timing>,
}

fn in_sample_trimmed_mse(data: &Dataset, theta: &crate::model::Parameter, h: usize) -> f64 {
    match data {
        Dataset::Regression { .. } | Dataset::MultiResponse { .. } => LossModel::new(LossKind::Squared, data)
            .and_then(|m| m.evaluate(theta))
            .map(|e| {
                let sq: Vec<f64> = e.losses.iter().map(|l| 2.0 * l).collect();
                trimmed_mean(&sq, h as f64 / data.n() as f64)
            })
            .unwrap_or(f64::NAN),
        Dataset::Ggm { .. } => f64::NAN,
    }
}

type RepOutput = (Vec<ExperimentRow>, Vec<Timing>);

fn run_replication(scenario: &Scenario, seed: u64, rep: usize, methods: &[MethodSpec]) -> Result<RepOutput> {
    let g = generate(scenario, seed)?;
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (mi, m) in methods.iter().enumerate() {
        let start = Instant::now();
        let grid = m.lambdas.resolve(&m.template, &g.data)?;
        let h = m.template.trim.resolve(g.data.n())?;
        let path = estimator::lambda_path(&m.template, &g.data, &grid)?;
        let seconds = start.elapsed().as_secs_f64();
        for (li, (lambda, fit)) in grid.iter().zip(&path).enumerate() {
            let mut metrics = score(&fit.theta, &g.truth, DEFAULT_SUPPORT_THRESHOLD)?;
            metrics.trimmed_mse = in_sample_trimmed_mse(&g.data, &fit.theta, h);
            rows.push(ExperimentRow {
                replication: rep,
                method: mi,
                lambda_index: li,
                lambda: *lambda,
                h,
                metrics,
                iterations: fit.iterations,
                converged: fit.converged,
                objective: fit.objective(),
            });
        }
        timings.push(Timing { replication: rep, method: mi, seconds });
    }
    Ok((rows, timings))
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c as f64
}

/// Runs every method on `replications` independently generated datasets.
/// Replications run concurrently; aggregation is by arithmetic mean and the
/// report does not depend on scheduling.
pub fn run_experiment(scenario: &Scenario, base_seed: u64, methods: &[MethodSpec], replications: usize) -> Result<ExperimentReport> {
    if replications < 1 {
        return Err(Error::InvalidArgument("replications must be at least 1".into()));
    }
    if methods.is_empty() || methods.iter().any(|m| m.lambdas.is_empty()) {
        return Err(Error::InvalidArgument("need at least one method with a non-empty lambda grid".into()));
    }
    scenario.validate()?;
    let outputs = exec::map_range(replications, |rep| run_replication(scenario, derive_seed(base_seed, rep as u64), rep, methods));
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for out in outputs {
        let (r, t) = out?;
        rows.extend(r);
        timings.extend(t);
    }

    let summaries = methods
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let mine: Vec<&ExperimentRow> = rows.iter().filter(|r| r.method == mi).collect();
            let points: Vec<SummaryPoint> = (0..m.lambdas.len())
                .map(|li| {
                    let at: Vec<&&ExperimentRow> = mine.iter().filter(|r| r.lambda_index == li).collect();
                    SummaryPoint {
                        lambda_index: li,
                        mean_lambda: mean(at.iter().map(|r| r.lambda)),
                        h: at[0].h,
                        mean_l2_error: mean(at.iter().map(|r| r.metrics.l2_error)),
                        mean_l1_error: mean(at.iter().map(|r| r.metrics.l1_error)),
                        mean_frobenius_error: mean(at.iter().map(|r| r.metrics.frobenius_error)),
                        mean_offdiag_l1_error: mean(at.iter().map(|r| r.metrics.offdiag_l1_error)),
                        mean_tpr: mean(at.iter().map(|r| r.metrics.tpr)),
                        mean_fpr: mean(at.iter().map(|r| r.metrics.fpr)),
                    }
                })
                .collect();
            let per_replication_auc: Vec<f64> = (0..replications)
                .map(|rep| {
                    let pts: Vec<(f64, f64)> = mine
                        .iter()
                        .filter(|r| r.replication == rep)
                        .map(|r| (r.metrics.fpr, r.metrics.tpr))
                        .collect();
                    roc_auc(&pts)
                })
                .collect();
            MethodSummary {
                name: m.name.clone(),
                mean_auc: mean(per_replication_auc.iter().copied()),
                mean_roc: points.iter().map(|p| (p.mean_fpr, p.mean_tpr)).collect(),
                per_replication_auc,
                points,
            }
        })
        .collect();

    Ok(ExperimentReport {
        rows,
        methods: summaries,
        timings,
    })
}

pub fn write_rows_csv<W: Write>(report: &ExperimentReport, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "replication,method,lambda_index,lambda,h,l2_error,l1_error,frobenius_error,offdiag_l1_error,tpr,fpr,trimmed_mse,iterations,converged,objective"
    )?;
    for r in &report.rows {
        let m = &r.metrics;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.replication,
            report.methods[r.method].name,
            r.lambda_index,
            fmt_f64(r.lambda),
            r.h,
            fmt_f64(m.l2_error),
            fmt_f64(m.l1_error),
            fmt_f64(m.frobenius_error),
            fmt_f64(m.offdiag_l1_error),
            fmt_f64(m.tpr),
            fmt_f64(m.fpr),
            fmt_f64(m.trimmed_mse),
            r.iterations,
            r.converged as u8,
            fmt_f64(r.objective),
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(report: &ExperimentReport, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "method,lambda_index,mean_lambda,h,mean_l2_error,mean_l1_error,mean_frobenius_error,mean_offdiag_l1_error,mean_tpr,mean_fpr,mean_auc"
    )?;
    for m in &report.methods {
        for p in &m.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                m.name,
                p.lambda_index,
                fmt_f64(p.mean_lambda),
                p.h,
                fmt_f64(p.mean_l2_error),
                fmt_f64(p.mean_l1_error),
                fmt_f64(p.mean_frobenius_error),
                fmt_f64(p.mean_offdiag_l1_error),
                fmt_f64(p.mean_tpr),
                fmt_f64(p.mean_fpr),
                fmt_f64(m.mean_auc),
            )?;
        }
    }
    Ok(())
}

pub fn write_timing_csv<W: Write>(report: &ExperimentReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "replication,method,wall_time_seconds")?;
    for t in &report.timings {
        writeln!(w, "{},{},{}", t.replication, report.methods[t.method].name, fmt_f64(t.seconds))?;
    }
    Ok(())
}
