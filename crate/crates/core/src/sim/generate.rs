//! Corrupted-data generators.

use nalgebra::DVector;
use rand::Rng;

use super::rng::{self, SimRng};
use crate::error::{Error, Result};
use crate::linalg::{self, CholeskyFactor, Matrix};
use crate::model::{Dataset, Parameter};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipRule {
    /// `⌊√n⌋` flipped labels
    SqrtN,
    /// `⌊0.1 n⌋` flipped labels
    Tenth,
}

impl FlipRule {
    pub fn count(self, n: usize) -> usize {
        match self {
            Self::SqrtN => (n as f64).sqrt().floor() as usize,
            Self::Tenth => (0.1 * n as f64 + 1e-9).floor() as usize,
        }
    }
}

/// Outlier component of the Gaussian mixture. M1/M2 draw outliers with a
/// second hub-network precision, M3/M4 with the identity; M1/M3 shift the
/// mean by ±1, M2/M4 by ±1.5.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixtureVariant {
    M1,
    M2,
    M3,
    M4,
}

impl MixtureVariant {
    pub fn mean_shift(self) -> f64 {
        match self {
            Self::M1 | Self::M3 => 1.0,
            Self::M2 | Self::M4 => 1.5,
        }
    }

    pub fn identity_outlier_precision(self) -> bool {
        matches!(self, Self::M3 | Self::M4)
    }
}

impl std::str::FromStr for MixtureVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M1" | "m1" => Ok(Self::M1),
            "M2" | "m2" => Ok(Self::M2),
            "M3" | "m3" => Ok(Self::M3),
            "M4" | "m4" => Ok(Self::M4),
            other => Err(Error::InvalidArgument(format!("unknown mixture variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    /// Logistic model with the highest-|⟨θ*, xᵢ⟩| labels flipped.
    LogisticFlip {
        n: usize,
        p: usize,
        /// Nonzero coefficients; `None` means `round(√p)`.
        k: Option<usize>,
        flip: FlipRule,
    },
    /// Low-rank multi-response regression with shifted-noise outliers.
    TraceNorm {
        n: usize,
        p: usize,
        q: usize,
        rank: usize,
        contamination: f64,
        outlier_mean: f64,
        outlier_sd: f64,
        noise_sd: f64,
    },
    /// Zero-mean hub-network Gaussian with a symmetric two-component
    /// outlier mixture.
    GgmMixture {
        n: usize,
        p: usize,
        p_o: f64,
        variant: MixtureVariant,
        hubs: usize,
    },
    /// Sparse linear model, AR(1) covariates, vertical outliers.
    LinearGeneric {
        n: usize,
        p: usize,
        k: usize,
        ar_rho: f64,
        contamination: f64,
        outlier_shift: f64,
        noise_sd: f64,
    },
}

impl Scenario {
    /// Trace-norm protocol defaults: outlier noise N(2, 1), clean noise
    /// variance 0.01.
    pub fn tracenorm(n: usize, p: usize, q: usize, rank: usize, contamination: f64) -> Self {
        Self::TraceNorm {
            n,
            p,
            q,
            rank,
            contamination,
            outlier_mean: 2.0,
            outlier_sd: 1.0,
            noise_sd: 0.1,
        }
    }

    pub fn ggm_mixture(n: usize, p: usize, variant: MixtureVariant) -> Self {
        Self::GgmMixture {
            n,
            p,
            p_o: 0.1,
            variant,
            hubs: 9,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Self::LogisticFlip { n, .. }
            | Self::TraceNorm { n, .. }
            | Self::GgmMixture { n, .. }
            | Self::LinearGeneric { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        let frac_ok = |f: f64| (0.0..=1.0).contains(&f);
        match *self {
            Self::LogisticFlip { n, p, k, .. } => {
                if n == 0 || p == 0 || k.is_some_and(|k| k == 0 || k > p) {
                    return bad("logistic scenario needs n, p ≥ 1 and 1 ≤ k ≤ p");
                }
            }
            Self::TraceNorm { n, p, q, rank, contamination, outlier_sd, noise_sd, .. } => {
                if n == 0 || p == 0 || q == 0 || rank == 0 || rank > p.min(q) {
                    return bad("trace-norm scenario needs positive sizes and rank ≤ min(p, q)");
                }
                if !frac_ok(contamination) || outlier_sd < 0.0 || noise_sd < 0.0 {
                    return bad("invalid trace-norm noise settings");
                }
            }
            Self::GgmMixture { n, p, p_o, .. } => {
                if n == 0 || p < 2 || !frac_ok(p_o) {
                    return bad("GGM scenario needs n ≥ 1, p ≥ 2 and p_o in [0,1]");
                }
            }
            Self::LinearGeneric { n, p, k, ar_rho, contamination, noise_sd, .. } => {
                if n == 0 || p == 0 || k == 0 || k > p || !frac_ok(contamination) || noise_sd < 0.0 || ar_rho.abs() >= 1.0 {
                    return bad("invalid linear scenario");
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub data: Dataset,
    pub truth: Parameter,
    /// Indices of corrupted samples, ascending.
    pub corrupted: Vec<usize>,
}

fn contamination_count(frac: f64, n: usize) -> usize {
    ((frac * n as f64) + 1e-9).floor() as usize
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Draws a dataset, its ground truth and the corrupted indices. Pure in
/// `(scenario, seed)`.
pub fn generate(scenario: &Scenario, seed: u64) -> Result<Generated> {
    scenario.validate()?;
    let mut rng = rng::seeded(seed);
    match *scenario {
        Scenario::LogisticFlip { n, p, k, flip } => logistic_flip(&mut rng, n, p, k, flip),
        Scenario::TraceNorm { n, p, q, rank, contamination, outlier_mean, outlier_sd, noise_sd } => {
            let x = rng::normal_matrix(&mut rng, n, p);
            let full = rng::normal_matrix(&mut rng, p, q);
            let truth = linalg::low_rank_approx(&full, rank);
            let corrupted = sorted(rng::sample_indices(&mut rng, n, contamination_count(contamination, n)));
            let mut y = &x * &truth;
            for i in 0..n {
                let bad = corrupted.binary_search(&i).is_ok();
                for j in 0..q {
                    y[(i, j)] += if bad {
                        rng::normal(&mut rng, outlier_mean, outlier_sd)
                    } else {
                        rng::normal(&mut rng, 0.0, noise_sd)
                    };
                }
            }
            Ok(Generated {
                data: Dataset::multi_response(x, y)?,
                truth: Parameter::matrix(truth),
                corrupted,
            })
        }
        Scenario::GgmMixture { n, p, p_o, variant, hubs } => {
            let theta = hub_precision(&mut rng, p, hubs);
            let theta_o = if variant.identity_outlier_precision() {
                Matrix::identity(p, p)
            } else {
                hub_precision(&mut rng, p, hubs)
            };
            let clean_l = CholeskyFactor::new(&theta)?.inverse();
            let clean_l = CholeskyFactor::new(&clean_l)?.l();
            let out_l = CholeskyFactor::new(&CholeskyFactor::new(&theta_o)?.inverse())?.l();
            let m = contamination_count(p_o, n);
            let drawn = rng::sample_indices(&mut rng, n, m);
            // First half of the drawn outliers go to −μ, the rest to +μ.
            let mut shift = vec![0.0; n];
            for (r, &i) in drawn.iter().enumerate() {
                shift[i] = if r < m / 2 { -variant.mean_shift() } else { variant.mean_shift() };
            }
            let mut samples = Matrix::zeros(n, p);
            for i in 0..n {
                let z = DVector::from_fn(p, |_, _| rng::standard_normal(&mut rng));
                let row = if shift[i] == 0.0 { &clean_l * z } else { &out_l * z + DVector::from_element(p, shift[i]) };
                samples.set_row(i, &row.transpose());
            }
            Ok(Generated {
                data: Dataset::ggm(samples)?,
                truth: Parameter::precision(theta)?,
                corrupted: sorted(drawn),
            })
        }
        Scenario::LinearGeneric { n, p, k, ar_rho, contamination, outlier_shift, noise_sd } => {
            let cov = Matrix::from_fn(p, p, |i, j| ar_rho.powi((i as i32 - j as i32).abs()));
            let l = CholeskyFactor::new(&cov)?.l();
            let x = rng::normal_matrix(&mut rng, n, p) * l.transpose();
            let mut truth = DVector::zeros(p);
            for j in rng::sample_indices(&mut rng, p, k) {
                truth[j] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
            let corrupted = sorted(rng::sample_indices(&mut rng, n, contamination_count(contamination, n)));
            let mut y = &x * &truth;
            for i in 0..n {
                y[i] += if corrupted.binary_search(&i).is_ok() {
                    rng::normal(&mut rng, outlier_shift, 1.0)
                } else {
                    rng::normal(&mut rng, 0.0, noise_sd)
                };
            }
            Ok(Generated {
                data: Dataset::regression(x, y)?,
                truth: Parameter::vector(truth),
                corrupted,
            })
        }
    }
}

fn logistic_flip(rng: &mut SimRng, n: usize, p: usize, k: Option<usize>, flip: FlipRule) -> Result<Generated> {
    let k = k.unwrap_or_else(|| ((p as f64).sqrt().round() as usize).clamp(1, p));
    let mut truth = DVector::zeros(p);
    for j in rng::sample_indices(rng, p, k) {
        truth[j] = rng::standard_normal(rng);
    }
    let x = rng::normal_matrix(rng, n, p);
    let z = &x * &truth;
    let mut y = DVector::from_fn(n, |i, _| {
        let prob = 1.0 / (1.0 + (-z[i]).exp());
        if rng.random::<f64>() < prob {
            1.0
        } else {
            0.0
        }
    });
    // Flip the realized labels of the highest-amplitude samples.
    let m = flip.count(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()).then(a.cmp(&b)));
    let corrupted = sorted(order[..m].to_vec());
    for &i in &corrupted {
        y[i] = 1.0 - y[i];
    }
    Ok(Generated {
        data: Dataset::regression(x, y)?,
        truth: Parameter::vector(truth),
        corrupted,
    })
}

fn off_diagonal_value(rng: &mut SimRng) -> f64 {
    // Uniform on [−0.75, −0.23] ∪ [0.25, 0.75].
    let neg = 0.75 - 0.23;
    let u = rng.random::<f64>() * (neg + 0.5);
    if u < neg {
        -0.75 + u
    } else {
        0.25 + (u - neg)
    }
}

/// Hub-network precision matrix: background edges with probability 0.03,
/// `hubs` hub rows/columns with edge probability 0.4, symmetrized uniform
/// weights, and a diagonal shift making the smallest eigenvalue 0.1.
pub fn hub_precision(rng: &mut SimRng, p: usize, hubs: usize) -> Matrix {
    let mut adj = vec![vec![false; p]; p];
    for i in 0..p {
        for j in (i + 1)..p {
            let e = rng.random::<f64>() < 0.03;
            adj[i][j] = e;
            adj[j][i] = e;
        }
    }
    for hub in rng::sample_indices(rng, p, hubs.min(p)) {
        for j in 0..p {
            if j != hub {
                let e = rng.random::<f64>() < 0.4;
                adj[hub][j] = e;
                adj[j][hub] = e;
            }
        }
    }
    let mut e = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            if i != j && adj[i][j] {
                e[(i, j)] = off_diagonal_value(rng);
            }
        }
    }
    let e = linalg::symmetrize(&e);
    let lmin = linalg::symmetric_eigenvalues(&e)[0];
    e + Matrix::identity(p, p) * (0.1 - lmin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hub_precision_is_pd_with_floor() {
        let mut rng = rng::seeded(11);
        let t = hub_precision(&mut rng, 30, 9);
        let ev = linalg::symmetric_eigenvalues(&t);
        assert!(ev[0] >= 0.1 - 1e-9);
        assert!((ev[0] - 0.1).abs() < 1e-9);
        assert!(Parameter::precision(t).is_ok());
    }

    #[test]
    fn no_contamination_means_no_corruption() {
        let g = generate(&Scenario::tracenorm(20, 8, 3, 2, 0.0), 1).unwrap();
        assert!(g.corrupted.is_empty());
    }

    #[test]
    fn tracenorm_truth_has_requested_rank() {
        let g = generate(&Scenario::tracenorm(30, 40, 5, 3, 0.2), 4).unwrap();
        let s = linalg::singular_values(g.truth.values());
        assert_eq!(s.iter().filter(|v| **v > 1e-8).count(), 3);
        assert_eq!(g.corrupted.len(), 6);
    }

    #[test]
    fn logistic_flips_highest_amplitude() {
        let sc = Scenario::LogisticFlip { n: 100, p: 16, k: None, flip: FlipRule::Tenth };
        let g = generate(&sc, 2).unwrap();
        assert_eq!(g.corrupted.len(), 10);
        assert_eq!(g.truth.as_slice().iter().filter(|v| **v != 0.0).count(), 4);
        let x = g.data.design();
        let amp: Vec<f64> = (0..100).map(|i| (x.row(i) * g.truth.values()).amax()).collect();
        let min_flipped = g.corrupted.iter().map(|&i| amp[i]).fold(f64::INFINITY, f64::min);
        let max_kept = (0..100).filter(|i| !g.corrupted.contains(i)).map(|i| amp[i]).fold(0.0, f64::max);
        assert!(min_flipped >= max_kept);
        let sq = Scenario::LogisticFlip { n: 100, p: 16, k: None, flip: FlipRule::SqrtN };
        assert_eq!(generate(&sq, 2).unwrap().corrupted.len(), 10);
    }

    #[test]
    fn generation_is_deterministic() {
        let sc = Scenario::ggm_mixture(40, 12, MixtureVariant::M1);
        let a = generate(&sc, 5).unwrap();
        let b = generate(&sc, 5).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.corrupted.len(), 4);
    }

    #[test]
    fn mixture_outliers_are_shifted() {
        let sc = Scenario::ggm_mixture(400, 6, MixtureVariant::M4);
        let g = generate(&sc, 8).unwrap();
        let x = g.data.design();
        let mean_abs_out: f64 = g.corrupted.iter().map(|&i| x.row(i).mean().abs()).sum::<f64>() / g.corrupted.len() as f64;
        assert!(mean_abs_out > 1.0);
    }

    #[test]
    fn m3_outliers_use_identity() {
        assert!(MixtureVariant::M3.identity_outlier_precision());
        assert_eq!(MixtureVariant::M3.mean_shift(), 1.0);
        assert!(!MixtureVariant::M1.identity_outlier_precision());
        assert_eq!(MixtureVariant::M2.mean_shift(), 1.5);
    }
}
