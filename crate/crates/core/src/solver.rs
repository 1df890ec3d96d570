//! Proximal gradient solvers for trimmed objectives.
//!
//! [`fit_partial_min`] re-solves the weight subproblem before every
//! proximal gradient step, so the weights are eliminated by partial
//! minimization. [`fit_alternate_min`] instead solves each fixed-weight
//! problem to completion before re-trimming.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{LossModel, Parameter, PointEval, Regularizer};
use crate::trim::{is_weight_optimal, solve_weights, TrimWeights};

const MIN_STEP: f64 = 1e-16;
const BB_MIN: f64 = 1e-12;
const BB_MAX: f64 = 1e6;
/// Rounding slack on the "no increase" test, relative to `max(1, |f|)`.
const ACCEPT_SLACK: f64 = 4.0 * f64::EPSILON;
const CYCLE_MEMORY: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol_rel_obj: f64,
    pub tol_grad_map: f64,
    pub ls_shrink: f64,
    pub ls_init_step: f64,
    pub weight_stable_iters: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol_rel_obj: 1e-12,
            tol_grad_map: 1e-9,
            ls_shrink: 0.5,
            ls_init_step: 1.0,
            weight_stable_iters: 5,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.ls_shrink > 0.0 && self.ls_shrink < 1.0) {
            return Err(Error::InvalidArgument(format!("ls_shrink must lie in (0,1), got {}", self.ls_shrink)));
        }
        if !(self.ls_init_step > 0.0) {
            return Err(Error::InvalidArgument("ls_init_step must be positive".into()));
        }
        if !(self.tol_rel_obj >= 0.0 && self.tol_grad_map >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be nonnegative".into()));
        }
        Ok(())
    }

    /// Same settings with both tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            tol_rel_obj: self.tol_rel_obj / factor,
            tol_grad_map: self.tol_grad_map / factor,
            max_iter: self.max_iter * 4,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub theta: Parameter,
    pub weights: TrimWeights,
    /// Composite objective after every accepted step, starting at `θ₀`.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Iteration from which the weights stayed fixed until termination.
    pub weight_stabilized_at: Option<usize>,
    pub ls_backtracks: usize,
    pub pd_rejections: usize,
    pub ball_projections: usize,
    /// Set when the solver stopped on a repeated (objective, weights) pair.
    pub degenerate: bool,
    /// Prox-gradient residual at the last accepted step.
    pub residual: f64,
}

impl FitResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

#[derive(Clone, Debug)]
enum WeightMode {
    Trim,
    Fixed(TrimWeights),
}

fn check_h(h: usize, n: usize) -> Result<()> {
    if h < 1 || h > n {
        Err(Error::InvalidH { h, n })
    } else {
        Ok(())
    }
}

fn rel_residual(theta: &Matrix, next: &Matrix) -> f64 {
    (theta - next).norm() / theta.norm().max(1.0)
}

fn prox_grad(
    model: &LossModel<'_>,
    reg: &Regularizer,
    h: usize,
    theta0: &Parameter,
    cfg: &SolverConfig,
    mode: WeightMode,
) -> Result<FitResult> {
    cfg.validate()?;
    check_h(h, model.n())?;
    model.check_param(theta0)?;
    let trimming = matches!(mode, WeightMode::Trim);

    let kind = theta0.kind();
    let mut theta = theta0.clone();
    let mut eval = model.evaluate(&theta)?;
    let mut w = match mode {
        WeightMode::Trim => solve_weights(&eval.losses, h)?,
        WeightMode::Fixed(w) => {
            if w.n() != model.n() || w.h() != h {
                return Err(Error::IncompatibleShapes("fixed weights do not match (n, h)".into()));
            }
            w
        }
    };
    let mut f = eval.smooth_objective(&w) + reg.penalty(&theta);
    let mut trace = vec![f];

    let mut step = cfg.ls_init_step;
    let mut prev: Option<(Matrix, Matrix)> = None;
    let mut stable = 0usize;
    let mut last_change = 0usize;
    let mut recent: VecDeque<TrimWeights> = VecDeque::new();
    let mut ls_backtracks = 0;
    let mut pd_rejections = 0;
    let mut ball_projections = 0;
    let mut converged = false;
    let mut degenerate = false;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=cfg.max_iter {
        iterations = it;
        let grad = model.gradient(&theta, &eval, &w);

        if let Some((pt, pg)) = &prev {
            let s = theta.values() - pt;
            let y = &grad - pg;
            let sy = s.dot(&y);
            let ss = s.dot(&s);
            if sy > 0.0 && ss > 0.0 && (ss / sy).is_finite() {
                step = ss / sy;
            }
        }
        step = step.clamp(BB_MIN, BB_MAX);

        let mut trial = step;
        let accepted: Option<(Parameter, PointEval, f64)> = loop {
            let mut cand = reg.prox_matrix(&(theta.values() - &grad * trial), trial);
            if reg.project_ball(&mut cand) {
                ball_projections += 1;
            }
            let cand = Parameter::from_parts(kind, cand);
            match model.evaluate(&cand) {
                Ok(e) => {
                    let fc = e.smooth_objective(&w) + reg.penalty(&cand);
                    if fc.is_finite() && fc <= f + ACCEPT_SLACK * f.abs().max(1.0) {
                        break Some((cand, e, fc));
                    }
                }
                Err(Error::NotPositiveDefinite) => pd_rejections += 1,
                Err(e) => return Err(e),
            }
            ls_backtracks += 1;
            trial *= cfg.ls_shrink;
            if trial < MIN_STEP {
                break None;
            }
        };

        let Some((cand, cand_eval, fc)) = accepted else {
            // No descent left at any step size. Accept this as convergence at
            // machine precision when the point is stationary.
            let unit = reg.prox_matrix(&(theta.values() - &grad), 1.0);
            let r = rel_residual(theta.values(), &unit);
            if r < 1e-8 && (!trimming || stable >= 1) {
                residual = r;
                converged = true;
                break;
            }
            return Err(Error::LineSearchFailed(MIN_STEP));
        };

        residual = rel_residual(theta.values(), cand.values());
        prev = Some((theta.values().clone(), grad));
        step = trial;
        theta = cand;
        eval = cand_eval;

        let (new_w, f_new) = if trimming {
            let nw = solve_weights(&eval.losses, h)?;
            let fv = if nw == w { fc } else { eval.smooth_objective(&nw) + reg.penalty(&theta) };
            (nw, fv)
        } else {
            (w.clone(), fc)
        };
        let rel = (f - f_new).abs() / f.abs().max(1.0);
        trace.push(f_new);
        f = f_new;

        if new_w != w {
            let cycling = recent.contains(&new_w);
            stable = 0;
            last_change = it;
            if recent.len() == CYCLE_MEMORY {
                recent.pop_front();
            }
            recent.push_back(std::mem::replace(&mut w, new_w));
            if cycling && rel < cfg.tol_rel_obj.max(1e-9) && residual < cfg.tol_grad_map.max(1e-7) {
                degenerate = true;
                converged = true;
                break;
            }
        } else {
            stable += 1;
        }

        let weights_done = !trimming || stable >= cfg.weight_stable_iters;
        if rel < cfg.tol_rel_obj && residual < cfg.tol_grad_map && weights_done {
            converged = true;
            break;
        }
    }

    let weight_stabilized_at = if !trimming || stable >= cfg.weight_stable_iters.max(1) || (converged && !degenerate) {
        Some(last_change)
    } else {
        None
    };

    Ok(FitResult {
        theta,
        weights: w,
        objective_trace: trace,
        iterations,
        converged,
        weight_stabilized_at,
        ls_backtracks,
        pd_rejections,
        ball_projections,
        degenerate,
        residual,
    })
}

/// Partial-minimization proximal gradient: trim, take a gradient step on the
/// trimmed loss, apply the proximal map, backtrack until the composite
/// objective does not increase.
pub fn fit_partial_min(
    model: &LossModel<'_>,
    reg: &Regularizer,
    h: usize,
    theta0: &Parameter,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    prox_grad(model, reg, h, theta0, cfg, WeightMode::Trim)
}

/// Proximal gradient on the convex problem with the weights held fixed.
pub fn fit_fixed_weights(
    model: &LossModel<'_>,
    reg: &Regularizer,
    weights: &TrimWeights,
    theta0: &Parameter,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    prox_grad(model, reg, weights.h(), theta0, cfg, WeightMode::Fixed(weights.clone()))
}

/// Full alternating minimization: solve the fixed-weight problem to
/// `inner_cfg` tolerances, re-trim, repeat until the selected subset repeats.
pub fn fit_alternate_min(
    model: &LossModel<'_>,
    reg: &Regularizer,
    h: usize,
    theta0: &Parameter,
    cfg: &SolverConfig,
    inner_cfg: &SolverConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    inner_cfg.validate()?;
    check_h(h, model.n())?;
    model.check_param(theta0)?;

    let mut theta = theta0.clone();
    let eval = model.evaluate(&theta)?;
    let mut w = solve_weights(&eval.losses, h)?;
    let mut trace = vec![eval.smooth_objective(&w) + reg.penalty(&theta)];
    let mut iterations = 0;
    let mut ls_backtracks = 0;
    let mut pd_rejections = 0;
    let mut ball_projections = 0;
    let mut converged = false;
    let mut stabilized_at = 0;
    let mut residual = f64::INFINITY;
    let mut seen: Vec<TrimWeights> = vec![w.clone()];
    let mut degenerate = false;

    for _ in 0..cfg.max_iter {
        stabilized_at = iterations;
        let inner = fit_fixed_weights(model, reg, &w, &theta, inner_cfg)?;
        iterations += inner.iterations;
        ls_backtracks += inner.ls_backtracks;
        pd_rejections += inner.pd_rejections;
        ball_projections += inner.ball_projections;
        residual = inner.residual;
        trace.extend_from_slice(&inner.objective_trace[1..]);
        theta = inner.theta;

        let eval = model.evaluate(&theta)?;
        let new_w = solve_weights(&eval.losses, h)?;
        if new_w == w {
            converged = inner.converged;
            break;
        }
        trace.push(eval.smooth_objective(&new_w) + reg.penalty(&theta));
        if seen.contains(&new_w) {
            degenerate = true;
            converged = inner.converged;
            w = new_w;
            break;
        }
        seen.push(new_w.clone());
        w = new_w;
    }

    Ok(FitResult {
        theta,
        weights: w,
        objective_trace: trace,
        iterations,
        converged,
        weight_stabilized_at: Some(stabilized_at),
        ls_backtracks,
        pd_rejections,
        ball_projections,
        degenerate,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalMinThresholds {
    pub residual_tol: f64,
    /// Step used in the prox-gradient residual.
    pub step: f64,
}

impl Default for LocalMinThresholds {
    fn default() -> Self {
        Self { residual_tol: 1e-6, step: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalMinReport {
    /// Weights solve the weight LP at `θ̃`.
    pub weight_optimal: bool,
    /// `‖θ̃ − prox(θ̃ − s∇)‖ / max(1, ‖θ̃‖)` at the fixed weights.
    pub residual: f64,
    pub residual_ok: bool,
    pub objective: f64,
}

impl LocalMinReport {
    pub fn passes(&self) -> bool {
        self.weight_optimal && self.residual_ok
    }
}

/// Checks both halves of the local-minimum definition for a fitted pair.
pub fn check_local_minimum(
    model: &LossModel<'_>,
    reg: &Regularizer,
    theta: &Parameter,
    weights: &TrimWeights,
    thresholds: LocalMinThresholds,
) -> Result<LocalMinReport> {
    let eval = model.evaluate(theta)?;
    let weight_optimal = is_weight_optimal(&eval.losses, weights);
    let grad = model.gradient(theta, &eval, weights);
    let s = thresholds.step;
    let next = reg.prox_matrix(&(theta.values() - &grad * s), s);
    let residual = rel_residual(theta.values(), &next);
    Ok(LocalMinReport {
        weight_optimal,
        residual,
        residual_ok: residual < thresholds.residual_tol,
        objective: eval.smooth_objective(weights) + reg.penalty(theta),
    })
}
