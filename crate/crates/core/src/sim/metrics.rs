//! Estimation-error and support-recovery metrics.

use crate::error::{Error, Result};
use crate::model::{ParamKind, Parameter};

pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub l2_error: f64,
    pub l1_error: f64,
    pub frobenius_error: f64,
    pub offdiag_l1_error: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub roc_points: Vec<(f64, f64)>,
    pub trimmed_mse: f64,
    pub wall_time_seconds: f64,
}

/// Entries whose support is scored: all of them, or the strict upper
/// triangle for precision matrices.
fn support_entries(p: &Parameter) -> Vec<f64> {
    let m = p.values();
    match p.kind() {
        ParamKind::Precision => {
            let mut out = Vec::new();
            for j in 0..m.ncols() {
                for i in 0..j {
                    out.push(m[(i, j)]);
                }
            }
            out
        }
        _ => m.iter().copied().collect(),
    }
}

/// Compares an estimate with the truth. `l2_error` is the Euclidean norm of
/// the difference (Frobenius for matrices).
pub fn score(estimate: &Parameter, truth: &Parameter, support_threshold: f64) -> Result<MetricsReport> {
    if estimate.shape() != truth.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", estimate.shape(), truth.shape())));
    }
    let diff = estimate.values() - truth.values();
    let frob = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    let l1 = diff.iter().map(|v| v.abs()).sum();
    let mut offdiag = 0.0;
    for j in 0..diff.ncols() {
        for i in 0..diff.nrows() {
            if i != j {
                offdiag += diff[(i, j)].abs();
            }
        }
    }

    let est = support_entries(estimate);
    let tru = support_entries(truth);
    let (mut tp, mut fp, mut pos, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (e, t) in est.iter().zip(&tru) {
        let in_est = e.abs() > support_threshold;
        if t.abs() > support_threshold {
            pos += 1;
            tp += in_est as usize;
        } else {
            neg += 1;
            fp += in_est as usize;
        }
    }
    let tpr = if pos == 0 { 1.0 } else { tp as f64 / pos as f64 };
    let fpr = if neg == 0 { 0.0 } else { fp as f64 / neg as f64 };

    Ok(MetricsReport {
        l2_error: frob,
        l1_error: l1,
        frobenius_error: frob,
        offdiag_l1_error: offdiag,
        tpr,
        fpr,
        roc_points: vec![(fpr, tpr)],
        trimmed_mse: f64::NAN,
        wall_time_seconds: 0.0,
    })
}

/// Area under the ROC curve traced by `points`, closed with `(0,0)` and
/// `(1,1)` and integrated by the trapezoid rule after sorting by FPR.
pub fn roc_auc(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len() + 2);
    pts.push((0.0, 0.0));
    pts.extend_from_slice(points);
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use nalgebra::DVector;

    #[test]
    fn perfect_estimate() {
        let t = Parameter::vector(DVector::from_vec(vec![1.0, 0.0, -2.0, 0.0]));
        let r = score(&t, &t, DEFAULT_SUPPORT_THRESHOLD).unwrap();
        assert_eq!((r.l2_error, r.l1_error, r.tpr, r.fpr), (0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn zero_estimate() {
        let t = Parameter::vector(DVector::from_vec(vec![3.0, 0.0, -4.0, 0.0]));
        let r = score(&t.zeros_like(), &t, DEFAULT_SUPPORT_THRESHOLD).unwrap();
        assert_eq!((r.tpr, r.fpr), (0.0, 0.0));
        assert_eq!(r.l2_error, 5.0);
    }

    #[test]
    fn precision_support_uses_off_diagonal() {
        let t = Parameter::precision(Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 2.0, 0.0, 0.0, 0.0, 2.0])).unwrap();
        let e = Parameter::precision(Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.3, 0.0, 1.0, 0.0, 0.3, 0.0, 1.0])).unwrap();
        let r = score(&e, &t, DEFAULT_SUPPORT_THRESHOLD).unwrap();
        assert_eq!(r.tpr, 0.0);
        assert_eq!(r.fpr, 0.5);
        assert!((r.offdiag_l1_error - 1.6).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let a = Parameter::vector(DVector::zeros(2));
        let b = Parameter::vector(DVector::zeros(3));
        assert!(matches!(score(&a, &b, 0.0), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn auc_extremes() {
        assert!((roc_auc(&[(0.0, 1.0)]) - 1.0).abs() < 1e-15);
        assert!((roc_auc(&[]) - 0.5).abs() < 1e-15);
        assert!((roc_auc(&[(0.5, 0.5)]) - 0.5).abs() < 1e-15);
    }
}
