//! Dense linear-algebra kernels: Cholesky with log-determinant, a
//! deterministic-sign SVD, singular-value shrinkage and spectral norms.
//!
//! Everything here is a pure function of its inputs.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

const SVD_EPS: f64 = 1e-10;
const SVD_MAX_ITER: usize = 10_000;

/// Returns `(m + mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor of a positive-definite matrix.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    chol: Cholesky<f64, Dyn>,
}

impl CholeskyFactor {
    /// Factorizes `m`, reading only its lower triangle.
    pub fn new(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::IncompatibleShapes(format!(
                "cholesky needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
        if chol.l_dirty().diagonal().iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { chol })
    }

    pub fn l(&self) -> Matrix {
        self.chol.l()
    }

    pub fn logdet(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Symmetric inverse of the factorized matrix.
    pub fn inverse(&self) -> Matrix {
        symmetrize(&self.chol.inverse())
    }

    pub fn solve(&self, b: &Matrix) -> Matrix {
        self.chol.solve(b)
    }
}

/// Factorizes a symmetric matrix and returns `(L, log det M)` with `M = L Lᵀ`.
pub fn cholesky_logdet(m: &Matrix) -> Result<(Matrix, f64)> {
    let f = CholeskyFactor::new(m)?;
    Ok((f.l(), f.logdet()))
}

/// A symmetric matrix certified positive definite by a successful Cholesky
/// factorization. Inputs are symmetrized on construction.
#[derive(Clone, Debug)]
pub struct SymmetricPd {
    m: Matrix,
}

impl SymmetricPd {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::IncompatibleShapes(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale.max(1.0) {
            return Err(Error::IncompatibleShapes(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let m = symmetrize(&m);
        CholeskyFactor::new(&m)?;
        Ok(Self { m })
    }

    pub fn identity(p: usize) -> Self {
        Self { m: Matrix::identity(p, p) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn cholesky(&self) -> CholeskyFactor {
        // Certified at construction.
        CholeskyFactor::new(&self.m).expect("certified positive definite")
    }
}

/// Thin SVD `M = U diag(s) Vᵀ` with singular values sorted descending and the
/// first nonzero entry of every left singular vector made positive.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v_t: Matrix,
}

pub fn svd(m: &Matrix) -> Svd {
    let dec = m
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITER)
        .expect("SVD failed to converge");
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested Vt");
    let s = dec.singular_values;

    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let mut u_sorted = Matrix::zeros(u.nrows(), k);
    let mut vt_sorted = Matrix::zeros(k, v_t.ncols());
    let mut s_sorted = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u.column(src).into_owned();
        let mut vrow = v_t.row(src).into_owned();
        if let Some(first) = ucol.iter().find(|x| x.abs() > 1e-14) {
            if *first < 0.0 {
                ucol.neg_mut();
                vrow.neg_mut();
            }
        }
        u_sorted.set_column(dst, &ucol);
        vt_sorted.set_row(dst, &vrow);
        s_sorted.push(s[src]);
    }
    Svd {
        u: u_sorted,
        singular_values: s_sorted,
        v_t: vt_sorted,
    }
}

pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .clone()
        .try_svd(false, false, SVD_EPS, SVD_MAX_ITER)
        .expect("SVD failed to converge")
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `U diag(max(σᵢ − ν, 0)) Vᵀ`.
pub fn svd_soft_threshold(m: &Matrix, nu: f64) -> Matrix {
    assert!(nu >= 0.0, "threshold must be nonnegative");
    if nu == 0.0 {
        return m.clone();
    }
    let dec = svd(m);
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for (i, s) in dec.singular_values.iter().enumerate() {
        let shrunk = s - nu;
        if shrunk > 0.0 {
            out += dec.u.column(i) * dec.v_t.row(i) * shrunk;
        }
    }
    out
}

/// Best rank-`r` approximation in Frobenius norm.
pub fn low_rank_approx(m: &Matrix, rank: usize) -> Matrix {
    let dec = svd(m);
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for i in 0..rank.min(dec.singular_values.len()) {
        out += dec.u.column(i) * dec.v_t.row(i) * dec.singular_values[i];
    }
    out
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Matrix) -> f64 {
    singular_values(m).iter().sum()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Frobenius inner product `⟨A, B⟩ = Σ Aᵢⱼ Bᵢⱼ`.
pub fn frob_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
