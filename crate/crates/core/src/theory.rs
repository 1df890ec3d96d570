//! Tuning-parameter and error-bound calculators, plus numerical checks of
//! the curvature and concentration lemmas behind them.

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, CholeskyFactor, Matrix, SymmetricPd};
use crate::model::{LossModel, Parameter, Regularizer};
use crate::sim::rng;
use crate::trim::TrimWeights;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryParams {
    /// Restricted-curvature constant.
    pub kappa_l: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    /// Subspace compatibility `sup R(u)/‖u‖₂` (√k for k-sparse ℓ1).
    pub psi: f64,
    /// Good-sample margin `(|G| − |B|)/|G|`.
    pub alpha: f64,
    /// Outlier design bound `f(X^B)`.
    pub fxb: f64,
    pub k: usize,
    pub rho: f64,
    pub lambda: f64,
    pub h: usize,
    pub n: usize,
    pub p: usize,
    pub b_size: usize,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.tau1, self.tau2, self.tau3, self.psi, self.fxb, self.rho, self.lambda];
        if nonneg.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("theory parameters must be nonnegative".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        if self.h > self.n {
            return Err(Error::InvalidCounts(format!("h={} exceeds n={}", self.h, self.n)));
        }
        Ok(())
    }
}

/// `(‖θ̃−θ*‖₂ bound, R(θ̃−θ*) bound)`:
/// `(3λΨ/2 + τ₂)/κ` and `2(2λΨ + τ₂)²/(λκ)`.
///
/// The λ lower bound involving the dual norm of the gradient at the truth is
/// the caller's responsibility; see [`lambda_floor`].
pub fn error_bounds(tp: &TheoryParams) -> Result<(f64, f64)> {
    if !(tp.kappa_l > 0.0) {
        return Err(Error::NonPositiveCurvature(tp.kappa_l));
    }
    tp.validate()?;
    let l2 = (1.5 * tp.lambda * tp.psi + tp.tau2) / tp.kappa_l;
    let r = 2.0 / (tp.lambda * tp.kappa_l) * (2.0 * tp.lambda * tp.psi + tp.tau2).powi(2);
    Ok((l2, r))
}

/// Smallest λ the general error bound admits: `4·max(R*(∇L(θ*, w*)), 2ρτ₁ + τ₃)`.
pub fn lambda_floor(dual_norm_at_truth: f64, rho: f64, tau1: f64, tau3: f64) -> f64 {
    4.0 * dual_norm_at_truth.max(2.0 * rho * tau1 + tau3)
}

fn max_diag(m: &Matrix) -> f64 {
    m.diagonal().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Graphical-lasso λ:
/// `4·max{8 (maxᵢΣᵢᵢ) √(10τ log p/(h−|B|)) + (|B|/h)‖Σ‖_∞, f(X^B) √(log p/h)}`
/// with `‖·‖_∞` the largest absolute entry. `τ = 3` gives the `√(30 log p)`
/// form.
pub fn ggm_lambda(sigma: &SymmetricPd, h: usize, b_size: usize, p: usize, fxb: f64, tau: f64) -> Result<f64> {
    if h <= b_size {
        return Err(Error::InvalidCounts(format!("need h > |B|, got h={h}, |B|={b_size}")));
    }
    if p < 2 {
        return Err(Error::InvalidCounts("need p ≥ 2 so that log p > 0".into()));
    }
    if !(fxb >= 0.0) || !(tau > 0.0) {
        return Err(Error::InvalidArgument("f(X^B) must be nonnegative and τ positive".into()));
    }
    let s = sigma.matrix();
    let logp = (p as f64).ln();
    let first = 8.0 * max_diag(s) * (10.0 * tau * logp / (h - b_size) as f64).sqrt() + b_size as f64 / h as f64 * s.amax();
    let second = fxb * (logp / h as f64).sqrt();
    Ok(4.0 * first.max(second))
}

/// Constant `c` of the `λ = c√(log p/n)` choice for GGMs with `|B| ≤ a√n`:
/// `4·max{16 (maxᵢΣᵢᵢ) √15 + 2a‖Σ‖_∞/√log p, √2 f(X^B)}`.
pub fn ggm_constant_c(sigma: &SymmetricPd, a: f64, p: usize, fxb: f64) -> f64 {
    let s = sigma.matrix();
    let logp = (p as f64).ln();
    4.0 * (16.0 * max_diag(s) * 15f64.sqrt() + 2.0 * a * s.amax() / logp.sqrt()).max(2f64.sqrt() * fxb)
}

/// Frobenius bound `(1/κ)((3c/2)√((k+p) log p/n) + f(X^B)√(2|B| log p/n))`.
pub fn ggm_frobenius_bound(c: f64, k: usize, p: usize, n: usize, fxb: f64, b_size: usize, kappa_l: f64) -> Result<f64> {
    if !(kappa_l > 0.0) {
        return Err(Error::NonPositiveCurvature(kappa_l));
    }
    let logp = (p as f64).ln();
    let n = n as f64;
    Ok((1.5 * c * ((k + p) as f64 * logp / n).sqrt() + fxb * (2.0 * b_size as f64 * logp / n).sqrt()) / kappa_l)
}

/// Outlier design bound for Gaussian outliers:
/// `4√2 a (1+√log p)² |||Σ_B|||₂ / √log p`.
pub fn ggm_outlier_term(a: f64, p: usize, sigma_b_spectral: f64) -> f64 {
    let logp = (p as f64).ln();
    4.0 * 2f64.sqrt() * a * (1.0 + logp.sqrt()).powi(2) * sigma_b_spectral / logp.sqrt()
}

/// Sparse LTS tuning `λ = c√(log p/h)`.
pub fn lts_lambda(h: usize, p: usize, c: f64) -> f64 {
    c * ((p as f64).ln() / h as f64).sqrt()
}

/// Sparse LTS bounds `(ℓ2, ℓ1)`:
/// `c'(√(k log p/h) + c''√(|B| log p/h))` and `4c'(…)²`.
///
/// `c'` depends on the covariance, noise level and good-sample margin; `c''`
/// is below one. Neither has a closed form, so both are inputs.
pub fn lts_bounds(c_prime: f64, c_dprime: f64, k: usize, b_size: usize, h: usize, p: usize) -> (f64, f64) {
    let logp = (p as f64).ln();
    let h = h as f64;
    let inner = (k as f64 * logp / h).sqrt() + c_dprime * (b_size as f64 * logp / h).sqrt();
    (c_prime * inner, 4.0 * c_prime * inner * inner)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RscCheck {
    /// `⟨Θ*⁻¹ − (Θ*+Δ)⁻¹, Δ⟩`
    pub lhs: f64,
    /// `‖Δ‖_F² / (|||Θ*|||₂ + 1)²`
    pub rhs: f64,
    pub holds: bool,
}

/// Log-determinant curvature lemma for `‖Δ‖_F ≤ 1`.
pub fn check_rsc_inequality(theta_star: &SymmetricPd, delta: &Matrix) -> Result<RscCheck> {
    let t = theta_star.matrix();
    if delta.shape() != t.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", delta.shape(), t.shape())));
    }
    let fro = delta.norm();
    if fro > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!("need ‖Δ‖_F ≤ 1, got {fro}")));
    }
    let inv_star = theta_star.cholesky().inverse();
    let inv_moved = CholeskyFactor::new(&(t + delta))?.inverse();
    let lhs = linalg::frob_dot(&(inv_star - inv_moved), delta);
    let rhs = fro * fro / (linalg::spectral_norm(t) + 1.0).powi(2);
    Ok(RscCheck { lhs, rhs, holds: lhs - rhs >= -1e-10 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RscSweep {
    pub draws: usize,
    pub passes: usize,
    /// Smallest `lhs − rhs` seen.
    pub min_margin: f64,
}

/// Random draws of the curvature lemma: `Θ* = I + AAᵀ/p` with Gaussian `A`
/// (so `λ_min(Θ*) ≥ 1` and `Θ* + Δ` stays positive definite) and a symmetric
/// Gaussian direction `Δ` rescaled to `‖Δ‖_F = u`, `u ~ U(0, 1)`.
pub fn rsc_sweep(p: usize, draws: usize, seed: u64) -> Result<RscSweep> {
    if p == 0 {
        return Err(Error::InvalidCounts("need p ≥ 1".into()));
    }
    let checks: Vec<Result<RscCheck>> = exec::map_range(draws, |d| {
        let mut r = rng::seeded(rng::derive_seed(seed, d as u64));
        let a = rng::normal_matrix(&mut r, p, p);
        let theta = SymmetricPd::new(linalg::symmetrize(&(Matrix::identity(p, p) + &a * a.transpose() / p as f64)))?;
        let g = rng::normal_matrix(&mut r, p, p);
        let sym = linalg::symmetrize(&g);
        let u: f64 = rand::Rng::random(&mut r);
        let delta = &sym * (u / sym.norm());
        check_rsc_inequality(&theta, &delta)
    });
    let mut passes = 0;
    let mut min_margin = f64::INFINITY;
    for c in checks {
        let c = c?;
        passes += c.holds as usize;
        min_margin = min_margin.min(c.lhs - c.rhs);
    }
    Ok(RscSweep { draws, passes, min_margin })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleCovCheck {
    pub violation_rate: f64,
    /// `4/p^(τ−2)`, capped at 1.
    pub allowed_rate: f64,
    /// Binomial standard error of a rate equal to `allowed_rate`.
    pub mc_standard_error: f64,
    /// `8 (maxᵢΣᵢᵢ) √(10τ log p/n)`.
    pub bound: f64,
    pub trials: usize,
}

impl SampleCovCheck {
    /// Violation rate within the allowed rate plus three standard errors.
    pub fn passes(&self) -> bool {
        self.violation_rate <= self.allowed_rate + 3.0 * self.mc_standard_error
    }
}

/// Monte Carlo estimate of how often `‖(1/n)ΣxᵢxᵢᵀΣ − Σ‖_∞` exceeds
/// `8 (maxᵢΣᵢᵢ) √(10τ log p/n)` for `xᵢ ~ N(0, Σ)`.
pub fn check_samplecov_concentration(sigma: &SymmetricPd, n: usize, tau: f64, trials: usize, seed: u64) -> Result<SampleCovCheck> {
    if !(tau > 2.0) {
        return Err(Error::InvalidTau(tau));
    }
    let s = sigma.matrix();
    let p = sigma.dim();
    if p < 2 {
        return Err(Error::InvalidCounts("need p ≥ 2".into()));
    }
    if (n as f64) < 40.0 * max_diag(s) {
        return Err(Error::InvalidCounts(format!("need n ≥ 40·maxᵢΣᵢᵢ, got n={n}")));
    }
    if trials == 0 {
        return Err(Error::InvalidCounts("need at least one trial".into()));
    }
    let l = sigma.cholesky().l();
    let bound = 8.0 * max_diag(s) * (10.0 * tau * (p as f64).ln() / n as f64).sqrt();
    let violated: Vec<bool> = exec::map_range(trials, |t| {
        let mut r = rng::seeded(rng::derive_seed(seed, t as u64));
        let z = rng::normal_matrix(&mut r, n, p);
        let x = z * l.transpose();
        let cov = x.tr_mul(&x) / n as f64;
        (cov - s).amax() > bound
    });
    let violation_rate = violated.iter().filter(|v| **v).count() as f64 / trials as f64;
    let allowed_rate = (4.0 / (p as f64).powf(tau - 2.0)).min(1.0);
    Ok(SampleCovCheck {
        violation_rate,
        allowed_rate,
        mc_standard_error: (allowed_rate * (1.0 - allowed_rate) / trials as f64).sqrt(),
        bound,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// `w*`: the fitted weights on good samples, zero on bad ones.
    pub w_star: Vec<f64>,
    /// `⟨∇L(θ*+Δ, w*) − ∇L(θ*, w*), Δ⟩` with `Δ = θ̃ − θ*`.
    pub c1_lhs: f64,
    /// `⟨∇L(θ̃, w̃) − ∇L(θ̃, w*), Δ⟩`.
    pub c2_lhs: f64,
    pub delta_l2: f64,
    pub delta_reg: f64,
    /// Largest curvature compatible with τ₁ = 0; each unit of τ₁ adds
    /// `tau1_slope` to it.
    pub kappa_at_zero_tau1: Option<f64>,
    pub tau1_slope: Option<f64>,
    /// Smallest τ₂ making the incoherence inequality hold with τ₃ = 0.
    pub tau2_min: Option<f64>,
    /// Smallest τ₃ making it hold with τ₂ = 0.
    pub tau3_min: Option<f64>,
}

/// Evaluates the restricted-curvature and incoherence inner products at a
/// fitted pair, given the truth and the set of genuine samples. No pass/fail
/// is reported since both conditions involve free constants.
pub fn diagnose_conditions(
    model: &LossModel<'_>,
    reg: &Regularizer,
    theta_tilde: &Parameter,
    w_tilde: &TrimWeights,
    theta_star: &Parameter,
    good: &[usize],
) -> Result<ConditionReport> {
    let n = model.n();
    if w_tilde.n() != n || theta_tilde.shape() != theta_star.shape() {
        return Err(Error::ShapeMismatch("weights or parameters do not match the data".into()));
    }
    if good.iter().any(|&i| i >= n) {
        return Err(Error::ShapeMismatch("good index out of range".into()));
    }
    let mut is_good = vec![false; n];
    for &i in good {
        is_good[i] = true;
    }
    let w_t = w_tilde.as_f64();
    let w_star: Vec<f64> = (0..n).map(|i| if is_good[i] { w_t[i] } else { 0.0 }).collect();
    let h = w_tilde.h() as f64;

    let grad = |theta: &Parameter, w: &[f64]| -> Result<Matrix> {
        let e = model.evaluate(theta)?;
        Ok(model.gradient_real(theta, &e, w, h))
    };
    let delta = theta_tilde.values() - theta_star.values();
    let c1_lhs = linalg::frob_dot(&(grad(theta_tilde, &w_star)? - grad(theta_star, &w_star)?), &delta);
    let c2_lhs = linalg::frob_dot(&(grad(theta_tilde, &w_t)? - grad(theta_tilde, &w_star)?), &delta);

    let delta_l2 = delta.norm();
    let delta_reg = reg.value_of(&delta);
    let pos = |v: f64| if v.is_finite() { Some(v) } else { None };
    let (kappa, slope, t2, t3) = if delta_l2 > 0.0 {
        (
            pos(c1_lhs / (delta_l2 * delta_l2)),
            pos(delta_reg * delta_reg / (delta_l2 * delta_l2)),
            pos((-c2_lhs / delta_l2).max(0.0)),
            if delta_reg > 0.0 { pos((-c2_lhs / delta_reg).max(0.0)) } else { None },
        )
    } else {
        (None, None, Some(0.0), Some(0.0))
    };
    Ok(ConditionReport {
        w_star,
        c1_lhs,
        c2_lhs,
        delta_l2,
        delta_reg,
        kappa_at_zero_tau1: kappa,
        tau1_slope: slope,
        tau2_min: t2,
        tau3_min: t3,
    })
}
