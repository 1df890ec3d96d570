//! The weight subproblem: minimize `Σ wᵢ lossᵢ` over the `h`-capped simplex.
//! Its vertex solution keeps the `h` smallest losses.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Binary inclusion indicators with exactly `h` samples selected.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TrimWeights {
    h: usize,
    included: Vec<bool>,
}

impl TrimWeights {
    pub fn from_indicators(included: Vec<bool>) -> Result<Self> {
        let h = included.iter().filter(|b| **b).count();
        if h == 0 {
            return Err(Error::InvalidH { h, n: included.len() });
        }
        Ok(Self { h, included })
    }

    /// Selects every sample.
    pub fn full(n: usize) -> Self {
        Self { h: n, included: vec![true; n] }
    }

    pub fn from_subset(n: usize, subset: &[usize]) -> Result<Self> {
        let mut included = vec![false; n];
        for &i in subset {
            if i >= n || included[i] {
                return Err(Error::InvalidArgument(format!("bad subset index {i}")));
            }
            included[i] = true;
        }
        Self::from_indicators(included)
    }

    pub fn n(&self) -> usize {
        self.included.len()
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn indicators(&self) -> &[bool] {
        &self.included
    }

    pub fn is_included(&self, i: usize) -> bool {
        self.included[i]
    }

    /// Selected indices in increasing order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.included.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn excluded(&self) -> impl Iterator<Item = usize> + '_ {
        self.included.iter().enumerate().filter(|(_, b)| !**b).map(|(i, _)| i)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.included.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

fn by_loss_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Global minimizer of the weight LP: the `h` smallest losses, ties going
/// to the smaller sample index.
pub fn solve_weights(losses: &[f64], h: usize) -> Result<TrimWeights> {
    let n = losses.len();
    if h < 1 || h > n {
        return Err(Error::InvalidH { h, n });
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument("losses must be finite".into()));
    }
    let mut included = vec![false; n];
    if h == n {
        included.fill(true);
    } else {
        let mut keyed: Vec<(f64, usize)> = losses.iter().copied().zip(0..n).collect();
        keyed.select_nth_unstable_by(h - 1, by_loss_then_index);
        for &(_, i) in &keyed[..h] {
            included[i] = true;
        }
    }
    Ok(TrimWeights { h, included })
}

/// True iff `w` solves the weight LP for `losses`, possibly non-uniquely.
pub fn is_weight_optimal(losses: &[f64], w: &TrimWeights) -> bool {
    if losses.len() != w.n() {
        return false;
    }
    let max_in = w.indices().map(|i| losses[i]).fold(f64::NEG_INFINITY, f64::max);
    let min_out = w.excluded().map(|i| losses[i]).fold(f64::INFINITY, f64::min);
    max_in <= min_out + 1e-12
}
