//! Per-sample losses, regularizers and their proximal maps.
//!
//! The smooth part of a trimmed objective is
//! `(1/h) Σ wᵢ ℓ(θ; Zᵢ) + shared(θ)`, where `shared` is the
//! weight-independent `−log det Θ` for the Gaussian likelihood and zero
//! otherwise.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, CholeskyFactor, Matrix};
use crate::trim::TrimWeights;

/// Observed samples. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Regression { x: Matrix, y: DVector<f64> },
    MultiResponse { x: Matrix, y: Matrix },
    Ggm { samples: Matrix },
}

fn check_finite(name: &str, m: &Matrix) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} contains non-finite entries")))
    }
}

impl Dataset {
    pub fn regression(x: Matrix, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::IncompatibleShapes("empty design matrix".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::IncompatibleShapes(format!(
                "design has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        check_finite("design", &x)?;
        check_finite("response", &Matrix::from_column_slice(y.len(), 1, y.as_slice()))?;
        Ok(Self::Regression { x, y })
    }

    pub fn multi_response(x: Matrix, y: Matrix) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::IncompatibleShapes("empty design or response".into()));
        }
        if x.nrows() != y.nrows() {
            return Err(Error::IncompatibleShapes(format!(
                "design has {} rows but responses have {}",
                x.nrows(),
                y.nrows()
            )));
        }
        check_finite("design", &x)?;
        check_finite("responses", &y)?;
        Ok(Self::MultiResponse { x, y })
    }

    pub fn ggm(samples: Matrix) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::IncompatibleShapes("empty sample matrix".into()));
        }
        check_finite("samples", &samples)?;
        Ok(Self::Ggm { samples })
    }

    pub fn n(&self) -> usize {
        self.design().nrows()
    }

    pub fn p(&self) -> usize {
        self.design().ncols()
    }

    /// Covariates for regression kinds, raw samples for GGM data.
    pub fn design(&self) -> &Matrix {
        match self {
            Self::Regression { x, .. } | Self::MultiResponse { x, .. } => x,
            Self::Ggm { samples } => samples,
        }
    }

    /// Number of responses per sample (0 for GGM data).
    pub fn responses(&self) -> usize {
        match self {
            Self::Regression { .. } => 1,
            Self::MultiResponse { y, .. } => y.ncols(),
            Self::Ggm { .. } => 0,
        }
    }

    /// A new dataset holding the given rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let pick = |m: &Matrix| m.select_rows(rows.iter());
        match self {
            Self::Regression { x, y } => Self::Regression {
                x: pick(x),
                y: DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i])),
            },
            Self::MultiResponse { x, y } => Self::MultiResponse { x: pick(x), y: pick(y) },
            Self::Ggm { samples } => Self::Ggm { samples: pick(samples) },
        }
    }

    /// Second-moment matrix `(1/n) Σ xᵢxᵢᵀ` of the design rows.
    pub fn second_moment(&self) -> Matrix {
        let x = self.design();
        linalg::symmetrize(&(x.transpose() * x / x.nrows() as f64))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Vector,
    Matrix,
    Precision,
}

/// An estimand: a coefficient vector (stored as a `p×1` matrix), a
/// coefficient matrix, or a precision matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    kind: ParamKind,
    values: Matrix,
}

impl Parameter {
    pub fn vector(v: DVector<f64>) -> Self {
        let p = v.len();
        Self {
            kind: ParamKind::Vector,
            values: Matrix::from_column_slice(p, 1, v.as_slice()),
        }
    }

    pub fn matrix(m: Matrix) -> Self {
        Self { kind: ParamKind::Matrix, values: m }
    }

    /// Symmetrizes `m` and certifies it positive definite.
    pub fn precision(m: Matrix) -> Result<Self> {
        let pd = linalg::SymmetricPd::new(m)?;
        Ok(Self {
            kind: ParamKind::Precision,
            values: pd.into_matrix(),
        })
    }

    pub(crate) fn from_parts(kind: ParamKind, values: Matrix) -> Self {
        Self { kind, values }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            kind: self.kind,
            values: Matrix::zeros(self.values.nrows(), self.values.ncols()),
        }
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    /// Coefficient vector view for vector parameters.
    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.values.as_slice())
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// `½‖yᵢ − θᵀxᵢ‖²`
    Squared,
    /// `log(1 + exp⟨xᵢ,θ⟩) − yᵢ⟨xᵢ,θ⟩`, labels in {0, 1}
    Logistic,
    /// `⟨Θ, xᵢxᵢᵀ⟩` per sample plus a shared `−log det Θ`
    GaussianLoglik,
}

impl LossKind {
    pub fn is_convex(self) -> bool {
        true
    }
}

/// A loss bound to a dataset.
#[derive(Clone, Copy, Debug)]
pub struct LossModel<'a> {
    kind: LossKind,
    data: &'a Dataset,
}

/// Per-sample losses and cached factorization at one parameter value.
#[derive(Clone, Debug)]
pub struct PointEval {
    pub losses: Vec<f64>,
    /// Weight-independent part of the smooth objective.
    pub shared: f64,
    chol: Option<CholeskyFactor>,
}

impl PointEval {
    /// `(1/h) Σ wᵢ lossᵢ + shared`.
    pub fn smooth_objective(&self, weights: &TrimWeights) -> f64 {
        let h = weights.h() as f64;
        let total: f64 = weights
            .indices()
            .map(|i| self.losses[i])
            .sum();
        total / h + self.shared
    }

    /// Same as [`smooth_objective`](Self::smooth_objective) with arbitrary
    /// real weights.
    pub fn smooth_objective_real(&self, w: &[f64], h: f64) -> f64 {
        self.losses.iter().zip(w).map(|(l, w)| l * w).sum::<f64>() / h + self.shared
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl<'a> LossModel<'a> {
    pub fn new(kind: LossKind, data: &'a Dataset) -> Result<Self> {
        match (kind, data) {
            (LossKind::Squared, Dataset::Regression { .. } | Dataset::MultiResponse { .. }) => {}
            (LossKind::Logistic, Dataset::Regression { y, .. }) => {
                if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
                    return Err(Error::IncompatibleData("logistic labels must be 0 or 1".into()));
                }
            }
            (LossKind::GaussianLoglik, Dataset::Ggm { .. }) => {}
            _ => {
                return Err(Error::IncompatibleData(format!(
                    "{kind:?} loss cannot be used with this dataset kind"
                )))
            }
        }
        Ok(Self { kind, data })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    /// Parameter kind and shape this model expects.
    pub fn param_shape(&self) -> (ParamKind, usize, usize) {
        match self.data {
            Dataset::Regression { x, .. } => (ParamKind::Vector, x.ncols(), 1),
            Dataset::MultiResponse { x, y } => (ParamKind::Matrix, x.ncols(), y.ncols()),
            Dataset::Ggm { samples } => (ParamKind::Precision, samples.ncols(), samples.ncols()),
        }
    }

    pub fn zero_parameter(&self) -> Parameter {
        let (kind, r, c) = self.param_shape();
        let values = if kind == ParamKind::Precision {
            Matrix::identity(r, c)
        } else {
            Matrix::zeros(r, c)
        };
        Parameter { kind, values }
    }

    pub fn check_param(&self, theta: &Parameter) -> Result<()> {
        let (kind, r, c) = self.param_shape();
        if theta.kind != kind || theta.values.shape() != (r, c) {
            return Err(Error::IncompatibleShapes(format!(
                "expected {kind:?} of shape {r}x{c}, got {:?} of shape {:?}",
                theta.kind,
                theta.values.shape()
            )));
        }
        Ok(())
    }

    /// All per-sample losses at `theta`, plus the shared term and (for the
    /// Gaussian likelihood) the Cholesky factor of `theta`.
    pub fn evaluate(&self, theta: &Parameter) -> Result<PointEval> {
        self.check_param(theta)?;
        let t = &theta.values;
        match self.data {
            Dataset::Regression { x, y } => {
                let z = x * t.column(0);
                let losses = match self.kind {
                    LossKind::Squared => z.iter().zip(y.iter()).map(|(zi, yi)| 0.5 * (yi - zi).powi(2)).collect(),
                    LossKind::Logistic => z.iter().zip(y.iter()).map(|(zi, yi)| softplus(*zi) - yi * zi).collect(),
                    LossKind::GaussianLoglik => unreachable!(),
                };
                Ok(PointEval { losses, shared: 0.0, chol: None })
            }
            Dataset::MultiResponse { x, y } => {
                let r = x * t - y;
                let losses = r.row_iter().map(|row| 0.5 * row.norm_squared()).collect();
                Ok(PointEval { losses, shared: 0.0, chol: None })
            }
            Dataset::Ggm { samples } => {
                let chol = CholeskyFactor::new(t)?;
                let xt = samples * t;
                let losses = xt
                    .row_iter()
                    .zip(samples.row_iter())
                    .map(|(a, b)| a.dot(&b))
                    .collect();
                Ok(PointEval {
                    losses,
                    shared: -chol.logdet(),
                    chol: Some(chol),
                })
            }
        }
    }

    pub fn per_sample_loss(&self, theta: &Parameter, i: usize) -> Result<f64> {
        if i >= self.n() {
            return Err(Error::IncompatibleShapes(format!("sample index {i} out of range")));
        }
        self.check_param(theta)?;
        let t = &theta.values;
        let x = self.data.design().row(i);
        Ok(match (self.kind, self.data) {
            (LossKind::Squared, Dataset::Regression { y, .. }) => 0.5 * (y[i] - x.dot(&t.column(0).transpose())).powi(2),
            (LossKind::Logistic, Dataset::Regression { y, .. }) => {
                let z = x.dot(&t.column(0).transpose());
                softplus(z) - y[i] * z
            }
            (LossKind::Squared, Dataset::MultiResponse { y, .. }) => 0.5 * (x * t - y.row(i)).norm_squared(),
            (LossKind::GaussianLoglik, Dataset::Ggm { .. }) => (x * t).dot(&x),
            _ => unreachable!("checked at construction"),
        })
    }

    /// Gradient of the smooth objective with real weights `w` and
    /// normalization `h`, reusing the factorization in `eval` when present.
    pub fn gradient_real(&self, theta: &Parameter, eval: &PointEval, w: &[f64], h: f64) -> Matrix {
        let t = &theta.values;
        match self.data {
            Dataset::Regression { x, y } => {
                let z = x * t.column(0);
                let r = DVector::from_iterator(
                    y.len(),
                    z.iter().zip(y.iter()).zip(w).map(|((zi, yi), wi)| {
                        let resid = match self.kind {
                            LossKind::Squared => zi - yi,
                            LossKind::Logistic => sigmoid(*zi) - yi,
                            LossKind::GaussianLoglik => unreachable!(),
                        };
                        wi * resid
                    }),
                );
                let g = x.tr_mul(&r) / h;
                Matrix::from_column_slice(g.len(), 1, g.as_slice())
            }
            Dataset::MultiResponse { x, y } => {
                let mut r = x * t - y;
                for (i, mut row) in r.row_iter_mut().enumerate() {
                    row *= w[i];
                }
                x.tr_mul(&r) / h
            }
            Dataset::Ggm { samples } => {
                let mut xw = samples.clone();
                for (i, mut row) in xw.row_iter_mut().enumerate() {
                    row *= w[i];
                }
                let s_w = samples.tr_mul(&xw) / h;
                let inv = match &eval.chol {
                    Some(c) => c.inverse(),
                    None => CholeskyFactor::new(t).expect("evaluated precision is PD").inverse(),
                };
                linalg::symmetrize(&(s_w - inv))
            }
        }
    }

    pub fn gradient(&self, theta: &Parameter, eval: &PointEval, weights: &TrimWeights) -> Matrix {
        self.gradient_real(theta, eval, &weights.as_f64(), weights.h() as f64)
    }

    /// `(1/h) Σ wᵢ ∇ℓ(θ; Zᵢ)` (plus `−Θ⁻¹` for the Gaussian likelihood).
    pub fn weighted_gradient(&self, theta: &Parameter, weights: &TrimWeights) -> Result<Matrix> {
        self.check_weights(weights)?;
        let eval = self.evaluate(theta)?;
        Ok(self.gradient(theta, &eval, weights))
    }

    /// `(1/h) Σ wᵢ ℓ(θ; Zᵢ) + shared(θ) + λ R(θ)`.
    pub fn weighted_objective(&self, reg: &Regularizer, theta: &Parameter, weights: &TrimWeights) -> Result<f64> {
        self.check_weights(weights)?;
        let eval = self.evaluate(theta)?;
        Ok(eval.smooth_objective(weights) + reg.penalty(theta))
    }

    fn check_weights(&self, weights: &TrimWeights) -> Result<()> {
        if weights.n() != self.n() {
            return Err(Error::IncompatibleShapes(format!(
                "weights cover {} samples, data has {}",
                weights.n(),
                self.n()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegKind {
    L1,
    /// ℓ1 on off-diagonal entries only
    L1OffDiag,
    TraceNorm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularizer {
    pub kind: RegKind,
    pub lambda: f64,
    /// Radius of the constraint ball `R(θ) ≤ ρ`; infinite disables it.
    pub radius: f64,
}

fn soft(u: f64, nu: f64) -> f64 {
    u.signum() * (u.abs() - nu).max(0.0)
}

impl Regularizer {
    pub fn new(kind: RegKind, lambda: f64) -> Result<Self> {
        Self::with_radius(kind, lambda, f64::INFINITY)
    }

    pub fn with_radius(kind: RegKind, lambda: f64, radius: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { kind, lambda, radius })
    }

    /// `R(θ)`.
    pub fn value(&self, theta: &Parameter) -> f64 {
        self.value_of(&theta.values)
    }

    pub fn value_of(&self, m: &Matrix) -> f64 {
        match self.kind {
            RegKind::L1 => m.iter().map(|v| v.abs()).sum(),
            RegKind::L1OffDiag => {
                let mut s = 0.0;
                for ((i, j), v) in m.iter().enumerate().map(|(k, v)| ((k % m.nrows(), k / m.nrows()), v)) {
                    if i != j {
                        s += v.abs();
                    }
                }
                s
            }
            RegKind::TraceNorm => linalg::nuclear_norm(m),
        }
    }

    /// `λ R(θ)`.
    pub fn penalty(&self, theta: &Parameter) -> f64 {
        if self.lambda == 0.0 {
            0.0
        } else {
            self.lambda * self.value(theta)
        }
    }

    /// Proximal map of `step · λ · R`.
    pub fn prox(&self, theta: &Parameter, step: f64) -> Parameter {
        Parameter::from_parts(theta.kind, self.prox_matrix(&theta.values, step))
    }

    pub fn prox_matrix(&self, m: &Matrix, step: f64) -> Matrix {
        assert!(step > 0.0, "prox step must be positive");
        let nu = step * self.lambda;
        if nu == 0.0 {
            return m.clone();
        }
        match self.kind {
            RegKind::L1 => m.map(|v| soft(v, nu)),
            RegKind::L1OffDiag => {
                let mut out = m.map(|v| soft(v, nu));
                for i in 0..m.nrows().min(m.ncols()) {
                    out[(i, i)] = m[(i, i)];
                }
                out
            }
            RegKind::TraceNorm => linalg::svd_soft_threshold(m, nu),
        }
    }

    /// Scales `m` back onto `R(·) ≤ ρ` if it lies outside. Returns whether
    /// it did. For the off-diagonal norm only off-diagonal entries scale.
    pub fn project_ball(&self, m: &mut Matrix) -> bool {
        if !self.radius.is_finite() {
            return false;
        }
        let r = self.value_of(m);
        if r <= self.radius {
            return false;
        }
        let scale = self.radius / r;
        match self.kind {
            RegKind::L1OffDiag => {
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        if i != j {
                            m[(i, j)] *= scale;
                        }
                    }
                }
            }
            _ => *m *= scale,
        }
        true
    }

    /// Dual norm `R*(g)`: max absolute entry for ℓ1, max absolute
    /// off-diagonal entry for the off-diagonal ℓ1, spectral norm for the
    /// trace norm.
    pub fn dual_norm(&self, g: &Matrix) -> f64 {
        match self.kind {
            RegKind::L1 => g.amax(),
            RegKind::L1OffDiag => {
                let mut best: f64 = 0.0;
                for j in 0..g.ncols() {
                    for i in 0..g.nrows() {
                        if i != j {
                            best = best.max(g[(i, j)].abs());
                        }
                    }
                }
                best
            }
            RegKind::TraceNorm => linalg::spectral_norm(g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_regression() -> Dataset {
        let x = Matrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, 10.0]);
        Dataset::regression(x, y).unwrap()
    }

    #[test]
    fn squared_per_sample_loss() {
        let d = Dataset::regression(Matrix::from_row_slice(1, 2, &[1.0, 0.0]), DVector::from_vec(vec![0.0])).unwrap();
        let m = LossModel::new(LossKind::Squared, &d).unwrap();
        let theta = Parameter::vector(DVector::from_vec(vec![2.0, 5.0]));
        assert_eq!(m.per_sample_loss(&theta, 0).unwrap(), 2.0);
        assert_eq!(m.evaluate(&theta).unwrap().losses, vec![2.0]);
    }

    #[test]
    fn logistic_loss_at_zero_is_log_two() {
        let d = Dataset::regression(Matrix::from_row_slice(1, 2, &[0.3, -1.0]), DVector::from_vec(vec![1.0])).unwrap();
        let m = LossModel::new(LossKind::Logistic, &d).unwrap();
        let theta = Parameter::vector(DVector::zeros(2));
        assert_relative_eq!(m.per_sample_loss(&theta, 0).unwrap(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn gaussian_per_sample_loss_is_quadratic_form() {
        let d = Dataset::ggm(Matrix::from_row_slice(1, 2, &[1.0, 2.0])).unwrap();
        let m = LossModel::new(LossKind::GaussianLoglik, &d).unwrap();
        let theta = Parameter::precision(Matrix::identity(2, 2)).unwrap();
        assert_eq!(m.per_sample_loss(&theta, 0).unwrap(), 5.0);
    }

    #[test]
    fn logistic_rejects_non_binary_labels() {
        let d = Dataset::regression(Matrix::from_row_slice(1, 1, &[1.0]), DVector::from_vec(vec![2.0])).unwrap();
        assert!(matches!(LossModel::new(LossKind::Logistic, &d), Err(Error::IncompatibleData(_))));
    }

    #[test]
    fn incompatible_parameter_is_rejected() {
        let d = toy_regression();
        let m = LossModel::new(LossKind::Squared, &d).unwrap();
        let theta = Parameter::vector(DVector::zeros(2));
        assert!(matches!(m.evaluate(&theta), Err(Error::IncompatibleShapes(_))));
        assert!(m.per_sample_loss(&Parameter::vector(DVector::zeros(1)), 3).is_err());
    }

    #[test]
    fn trimmed_toy_objective_is_zero() {
        let d = toy_regression();
        let m = LossModel::new(LossKind::Squared, &d).unwrap();
        let reg = Regularizer::new(RegKind::L1, 0.0).unwrap();
        let theta = Parameter::vector(DVector::from_vec(vec![1.0]));
        let w = TrimWeights::from_indicators(vec![true, true, false]).unwrap();
        assert_eq!(m.weighted_objective(&reg, &theta, &w).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_objective_at_identity() {
        let samples = Matrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 0.0]);
        let d = Dataset::ggm(samples).unwrap();
        let m = LossModel::new(LossKind::GaussianLoglik, &d).unwrap();
        let reg = Regularizer::new(RegKind::L1OffDiag, 7.0).unwrap();
        let theta = Parameter::precision(Matrix::identity(2, 2)).unwrap();
        let w = TrimWeights::from_indicators(vec![true, false, true]).unwrap();
        let f = m.weighted_objective(&reg, &theta, &w).unwrap();
        assert_relative_eq!(f, (5.0 + 9.0) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_non_pd_errors() {
        let d = Dataset::ggm(Matrix::from_row_slice(1, 2, &[1.0, 2.0])).unwrap();
        let m = LossModel::new(LossKind::GaussianLoglik, &d).unwrap();
        let bad = Parameter::from_parts(ParamKind::Precision, Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert_eq!(m.evaluate(&bad).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn gradient_vanishes_at_interpolant() {
        let x = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, -1.0, 1.0]);
        let d = Dataset::regression(x, y).unwrap();
        let m = LossModel::new(LossKind::Squared, &d).unwrap();
        let theta = Parameter::vector(DVector::from_vec(vec![2.0, -1.0]));
        let w = TrimWeights::full(3);
        assert!(m.weighted_gradient(&theta, &w).unwrap().amax() < 1e-15);
    }

    #[test]
    fn gaussian_gradient_vanishes_at_inverse_covariance() {
        let samples = Matrix::from_row_slice(4, 2, &[1.0, 0.2, -0.5, 1.0, 0.3, -1.2, 2.0, 0.4]);
        let d = Dataset::ggm(samples).unwrap();
        let m = LossModel::new(LossKind::GaussianLoglik, &d).unwrap();
        let s = d.second_moment();
        let theta = Parameter::precision(s.try_inverse().unwrap()).unwrap();
        let g = m.weighted_gradient(&theta, &TrimWeights::full(4)).unwrap();
        assert!(g.amax() < 1e-12);
    }

    #[test]
    fn prox_examples() {
        let l1 = Regularizer::new(RegKind::L1, 0.5).unwrap();
        let theta = Parameter::vector(DVector::from_vec(vec![1.2, -0.3]));
        let out = l1.prox(&theta, 1.0);
        assert_relative_eq!(out.as_slice()[0], 0.7, epsilon = 1e-15);
        assert_eq!(out.as_slice()[1], 0.0);

        let off = Regularizer::new(RegKind::L1OffDiag, 3.0).unwrap();
        let d = Parameter::precision(Matrix::from_diagonal(&DVector::from_vec(vec![5.0, 5.0]))).unwrap();
        assert_eq!(off.prox(&d, 2.0), d);

        let tn = Regularizer::new(RegKind::TraceNorm, 1.0).unwrap();
        let m = Parameter::matrix(Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]));
        let out = tn.prox(&m, 1.0);
        assert!((out.values() - Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn regularizer_values() {
        let l1 = Regularizer::new(RegKind::L1, 1.0).unwrap();
        assert_eq!(l1.value(&Parameter::vector(DVector::from_vec(vec![1.0, -2.0, 0.0]))), 3.0);
        let off = Regularizer::new(RegKind::L1OffDiag, 1.0).unwrap();
        assert_eq!(off.value(&Parameter::precision(Matrix::identity(3, 3)).unwrap()), 0.0);
        let tn = Regularizer::new(RegKind::TraceNorm, 1.0).unwrap();
        let m = Parameter::matrix(Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]));
        assert_relative_eq!(tn.value(&m), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn ball_projection_scales_to_boundary() {
        let reg = Regularizer::with_radius(RegKind::L1, 1.0, 2.0).unwrap();
        let mut m = Matrix::from_column_slice(2, 1, &[3.0, -1.0]);
        assert!(reg.project_ball(&mut m));
        assert_relative_eq!(reg.value_of(&m), 2.0, epsilon = 1e-14);
        assert!(!reg.project_ball(&mut m.clone()));
    }

    #[test]
    fn invalid_regularizer_settings() {
        assert!(Regularizer::new(RegKind::L1, -1.0).is_err());
        assert!(Regularizer::with_radius(RegKind::L1, 1.0, 0.0).is_err());
    }
}
