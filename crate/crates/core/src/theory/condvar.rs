//! Nonparametric estimates of `E[Var[T | Z]]` from paired samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CondVarEstimator {
    /// Equal-count bins on the conditioning variable (`ceil(n^(1/3))` bins
    /// when `bins` is `None`). Within each bin the target is detrended by a
    /// least-squares line before its residual variance is taken.
    Binning { bins: Option<usize> },
    /// Variance of the target among the `k` nearest neighbours (in the
    /// conditioning variable) of every sample, averaged over samples.
    Knn { k: usize },
}

impl Default for CondVarEstimator {
    fn default() -> Self {
        CondVarEstimator::Binning { bins: None }
    }
}

impl CondVarEstimator {
    pub const KNN_DEFAULT: CondVarEstimator = CondVarEstimator::Knn { k: 50 };
}

impl std::str::FromStr for CondVarEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binning" => Ok(CondVarEstimator::default()),
            "knn" => Ok(CondVarEstimator::KNN_DEFAULT),
            _ => Err(Error::InvalidConfig(format!("unknown estimator `{s}`"))),
        }
    }
}

const MIN_CELL: usize = 5;

/// Estimates `E[Var[target | conditioning]]`.
pub fn expected_conditional_variance(
    target: &[f64],
    conditioning: &[f64],
    estimator: CondVarEstimator,
) -> Result<f64> {
    let n = target.len();
    if n != conditioning.len() {
        return Err(Error::InvalidConfig("sample lengths differ".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| conditioning[a].total_cmp(&conditioning[b]));
    let z: Vec<f64> = order.iter().map(|&i| conditioning[i]).collect();
    let t: Vec<f64> = order.iter().map(|&i| target[i]).collect();

    match estimator {
        CondVarEstimator::Binning { bins } => {
            let bins = bins
                .unwrap_or_else(|| (n as f64).cbrt().ceil() as usize)
                .max(1);
            binned(&t, &z, bins)
        }
        CondVarEstimator::Knn { k } => knn(&t, &z, k),
    }
}

fn binned(t: &[f64], z: &[f64], bins: usize) -> Result<f64> {
    let n = t.len();
    let mut total = 0.0;
    for b in 0..bins {
        let lo = b * n / bins;
        let hi = (b + 1) * n / bins;
        let m = hi - lo;
        if m < MIN_CELL {
            return Err(Error::InsufficientSamples(m));
        }
        total += detrended_ss(&t[lo..hi], &z[lo..hi]) / (m as f64 - 2.0) * m as f64;
    }
    Ok(total / n as f64)
}

/// Residual sum of squares of `t` after a least-squares line in `z`.
fn detrended_ss(t: &[f64], z: &[f64]) -> f64 {
    let m = t.len() as f64;
    let zm = z.iter().sum::<f64>() / m;
    let tm = t.iter().sum::<f64>() / m;
    let mut szz = 0.0;
    let mut szt = 0.0;
    let mut stt = 0.0;
    for (&zi, &ti) in z.iter().zip(t) {
        let dz = zi - zm;
        let dt = ti - tm;
        szz += dz * dz;
        szt += dz * dt;
        stt += dt * dt;
    }
    if szz > 0.0 {
        (stt - szt * szt / szz).max(0.0)
    } else {
        stt
    }
}

fn knn(t: &[f64], z: &[f64], k: usize) -> Result<f64> {
    let n = t.len();
    if k < MIN_CELL || n < k {
        return Err(Error::InsufficientSamples(n.min(k)));
    }
    let mut total = 0.0;
    for i in 0..n {
        // the k nearest neighbours of a point in 1-D are a contiguous window
        let (mut lo, mut hi) = (i, i + 1);
        while hi - lo < k {
            let take_left = if lo == 0 {
                false
            } else if hi == n {
                true
            } else {
                z[i] - z[lo - 1] <= z[hi] - z[i]
            };
            if take_left {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let w = &t[lo..hi];
        let mean = w.iter().sum::<f64>() / k as f64;
        let ss: f64 = w.iter().map(|v| (v - mean) * (v - mean)).sum();
        total += ss / (k as f64 - 1.0);
    }
    Ok(total / n as f64)
}
