//! Scaling to a common range and removal of isolated low-density rows.

use serde::{Deserialize, Serialize};

use crate::data::CauseEffectPair;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingKind {
    /// Affine map onto `[0, 1]`.
    Normalize,
    /// Zero mean, unit sample variance.
    Standardize,
}

impl std::str::FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalize" => Ok(ScalingKind::Normalize),
            "standardize" => Ok(ScalingKind::Standardize),
            _ => Err(Error::InvalidConfig(format!("unknown scaling `{s}`"))),
        }
    }
}

/// Denominator used for variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceConvention {
    /// `1/(n-1)`.
    Sample,
    /// `1/n`.
    Population,
}

pub fn scale(v: &[f64], kind: ScalingKind) -> Result<Vec<f64>> {
    match kind {
        ScalingKind::Normalize => normalize(v),
        ScalingKind::Standardize => standardize(v),
    }
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// `(v - min) / (max - min)`.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = min_max(v);
    let range = hi - lo;
    if v.len() < 2 || !(range > 0.0) {
        return Err(Error::DegenerateRange);
    }
    Ok(v.iter()
        .map(|&x| {
            // pin the endpoints so that a second pass is the identity
            if x == hi {
                1.0
            } else {
                (x - lo) / range
            }
        })
        .collect())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn variance(v: &[f64], convention: VarianceConvention) -> f64 {
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    match convention {
        VarianceConvention::Sample => ss / (v.len() as f64 - 1.0),
        VarianceConvention::Population => ss / v.len() as f64,
    }
}

/// `(v - mean) / sd` with the sample (`1/(n-1)`) variance.
pub fn standardize(v: &[f64]) -> Result<Vec<f64>> {
    standardize_with(v, VarianceConvention::Sample)
}

pub fn standardize_with(v: &[f64], convention: VarianceConvention) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::DegenerateRange);
    }
    let m = mean(v);
    let var = variance(v, convention);
    let (lo, hi) = min_max(v);
    if !(var > 0.0) || lo == hi {
        return Err(Error::DegenerateRange);
    }
    let sd = var.sqrt();
    Ok(v.iter().map(|x| (x - m) / sd).collect())
}

/// Kernel bandwidth selection for the 2-D density estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    /// Silverman's rule for two dimensions, per axis: `sd * n^(-1/6)`.
    #[default]
    Silverman,
    /// The same bandwidth on both axes.
    Fixed(f64),
}

/// Gaussian product-kernel density estimate of the sample, evaluated at
/// each sample point. Points are summed in a canonical (sorted) order so
/// the result for a given point does not depend on the input row order.
pub fn kde_at_samples(x: &[f64], y: &[f64], rule: BandwidthRule) -> Result<Vec<f64>> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let (hx, hy) = match rule {
        BandwidthRule::Silverman => {
            let f = (n as f64).powf(-1.0 / 6.0);
            (
                variance(&xs, VarianceConvention::Sample).sqrt() * f,
                variance(&ys, VarianceConvention::Sample).sqrt() * f,
            )
        }
        BandwidthRule::Fixed(h) => (h, h),
    };
    if !(hx > 0.0 && hy > 0.0) {
        return Err(Error::DegenerateRange);
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * hx * hy * n as f64);
    let mut sorted_density = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            let dx = (xs[i] - xs[j]) / hx;
            let dy = (ys[i] - ys[j]) / hy;
            acc += (-0.5 * (dx * dx + dy * dy)).exp();
        }
        sorted_density[i] = acc * norm;
    }
    let mut density = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        density[i] = sorted_density[k];
    }
    Ok(density)
}

/// Drops rows whose estimated density is below `threshold` times the largest
/// estimated density. The estimate is taken on normalized coordinates.
pub fn remove_low_density(
    pair: &CauseEffectPair,
    threshold: f64,
    bandwidth: BandwidthRule,
) -> Result<CauseEffectPair> {
    const MIN_ROWS: usize = 10;
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "density threshold {threshold} outside [0, 1)"
        )));
    }
    if pair.len() < MIN_ROWS {
        return Err(Error::TooFewPointsRemain(pair.len()));
    }
    let nx = normalize(pair.x())?;
    let ny = normalize(pair.y())?;
    let density = kde_at_samples(&nx, &ny, bandwidth)?;
    let peak = density.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..pair.len())
        .filter(|&i| density[i] >= threshold * peak)
        .collect();
    if keep.len() < MIN_ROWS {
        return Err(Error::TooFewPointsRemain(keep.len()));
    }
    Ok(pair.select_rows(&keep))
}
