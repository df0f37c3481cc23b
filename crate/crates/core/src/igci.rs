//! Information-geometric baseline: the direction whose log-slope (or
//! marginal entropy difference) under a reference measure is smaller is
//! taken to be causal.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::data::{CauseEffectPair, Direction};
use crate::error::{Error, Result};
use crate::infer::Decision;
use crate::preprocess::{normalize, standardize};

/// Minimum number of rows accepted by [`igci_decide`].
pub const MIN_SAMPLES: usize = 20;

/// Scores closer than this are treated as a tie.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Both variables normalized onto `[0, 1]`.
    Uniform,
    /// Both variables standardized.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Mean log absolute slope between neighbours sorted by the input.
    Slope,
    /// Difference of 1-NN spacing entropy estimates of the marginals.
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IgciConfig {
    pub reference: Reference,
    pub estimator: Estimator,
}

impl IgciConfig {
    /// Short name such as `u-slope` or `g-entropy`.
    pub fn name(&self) -> String {
        let r = match self.reference {
            Reference::Uniform => "u",
            Reference::Gaussian => "g",
        };
        let e = match self.estimator {
            Estimator::Slope => "slope",
            Estimator::Entropy => "entropy",
        };
        format!("{r}-{e}")
    }
}

impl std::str::FromStr for IgciConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (r, e) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidConfig(format!("unknown IGCI variant `{s}`")))?;
        let reference = match r {
            "u" | "uniform" => Reference::Uniform,
            "g" | "gaussian" => Reference::Gaussian,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown IGCI reference `{r}`"
                )))
            }
        };
        let estimator = match e {
            "slope" => Estimator::Slope,
            "entropy" => Estimator::Entropy,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown IGCI estimator `{e}`"
                )))
            }
        };
        Ok(Self {
            reference,
            estimator,
        })
    }
}

/// Sorts by `input` and merges rows sharing an input value, averaging
/// their outputs. Fails when more than half of the sorted neighbour
/// differences are zero.
fn sorted_unique(input: &[f64], output: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rows: Vec<(f64, f64)> = input.iter().copied().zip(output.iter().copied()).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let zero_gaps = rows.windows(2).filter(|w| w[1].0 == w[0].0).count();
    if 2 * zero_gaps > rows.len() - 1 {
        return Err(Error::DegenerateSpacing);
    }
    let mut xs: Vec<f64> = Vec::with_capacity(rows.len());
    let mut ys: Vec<f64> = Vec::with_capacity(rows.len());
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        let mut sum = 0.0;
        while j < rows.len() && rows[j].0 == rows[i].0 {
            sum += rows[j].1;
            j += 1;
        }
        xs.push(rows[i].0);
        ys.push(sum / (j - i) as f64);
        i = j;
    }
    Ok((xs, ys))
}

/// Mean of `log|dy/dx|` over neighbours sorted by `input`, skipping pairs
/// with no change in the output.
pub fn slope_score(input: &[f64], output: &[f64]) -> Result<f64> {
    let (xs, ys) = sorted_unique(input, output)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 1..xs.len() {
        let dy = ys[i] - ys[i - 1];
        if dy != 0.0 {
            total += (dy / (xs[i] - xs[i - 1])).abs().ln();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::DegenerateSpacing);
    }
    Ok(total / count as f64)
}

/// 1-NN spacing estimate of the differential entropy of `v`.
pub fn spacing_entropy(v: &[f64]) -> Result<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let zero = gaps.iter().filter(|&&g| g == 0.0).count();
    if gaps.is_empty() || 2 * zero > gaps.len() {
        return Err(Error::DegenerateSpacing);
    }
    let logs: f64 = gaps.iter().filter(|&&g| g > 0.0).map(|g| g.ln()).sum();
    let m = v.len() as f64;
    Ok(digamma(m) - digamma(1.0) + logs / (gaps.len() - zero) as f64)
}

/// Decides the direction of `pair`. The two score fields of the returned
/// [`Decision`] hold the IGCI scores of the `x -> y` and `y -> x`
/// hypotheses (lower is preferred) and the confidence is
/// `1 - exp(-|difference|)`.
pub fn igci_decide(pair: &CauseEffectPair, cfg: &IgciConfig) -> Result<Decision> {
    if pair.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: pair.len(),
        });
    }
    let scale = match cfg.reference {
        Reference::Uniform => normalize,
        Reference::Gaussian => standardize,
    };
    let x = scale(pair.x())?;
    let y = scale(pair.y())?;
    let (score_xy, score_yx) = match cfg.estimator {
        Estimator::Slope => (slope_score(&x, &y)?, slope_score(&y, &x)?),
        Estimator::Entropy => {
            let (hx, hy) = (spacing_entropy(&x)?, spacing_entropy(&y)?);
            (hy - hx, hx - hy)
        }
    };
    let gap = score_xy - score_yx;
    let direction = if gap.abs() <= TIE_TOL {
        None
    } else if gap < 0.0 {
        Some(Direction::XtoY)
    } else {
        Some(Direction::YtoX)
    };
    Ok(Decision {
        direction,
        mse_y_given_x: score_xy,
        mse_x_given_y: score_yx,
        confidence: if direction.is_some() {
            1.0 - (-gap.abs()).exp()
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    const ALL: [&str; 4] = ["u-slope", "u-entropy", "g-slope", "g-entropy"];

    #[test]
    fn convex_map_points_forward() {
        let x = grid(1000);
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let pair = CauseEffectPair::new("exp", x, y).unwrap();
        let d = igci_decide(&pair, &"u-slope".parse().unwrap()).unwrap();
        assert_eq!(d.direction, Some(Direction::XtoY));
    }

    #[test]
    fn affine_map_is_a_tie() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 + 2.0 * v).collect();
        let pair = CauseEffectPair::new("affine", x, y).unwrap();
        for name in ALL {
            let d = igci_decide(&pair, &name.parse().unwrap()).unwrap();
            assert_eq!(d.direction, None, "{name}: {d:?}");
        }
    }

    #[test]
    fn swap_flips() {
        let x: Vec<f64> = (0..300)
            .map(|i| (i as f64 * 0.754_877_666).fract())
            .collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 0.1 * v).collect();
        let pair = CauseEffectPair::new("cubic", x, y).unwrap();
        for name in ALL {
            let cfg = name.parse().unwrap();
            let a = igci_decide(&pair, &cfg).unwrap();
            let b = igci_decide(&pair.swapped(), &cfg).unwrap();
            assert!(a.direction.is_some(), "{name}");
            assert_eq!(a.direction.map(Direction::flipped), b.direction, "{name}");
        }
    }

    #[test]
    fn duplicates_are_merged() {
        let x = vec![0.0, 0.0, 1.0, 2.0, 3.0];
        let y = vec![1.0, 3.0, 4.0, 6.0, 7.0];
        let (xs, ys) = sorted_unique(&x, &y).unwrap();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(ys, vec![2.0, 4.0, 6.0, 7.0]);
        let mostly_equal = vec![1.0, 1.0, 1.0, 1.0, 2.0];
        assert!(matches!(
            sorted_unique(&mostly_equal, &y),
            Err(Error::DegenerateSpacing)
        ));
    }

    #[test]
    fn too_few_rows() {
        let pair = CauseEffectPair::new("s", grid(10), grid(10)).unwrap();
        assert!(matches!(
            igci_decide(&pair, &"u-slope".parse().unwrap()),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn variant_names_round_trip() {
        for name in ALL {
            assert_eq!(name.parse::<IgciConfig>().unwrap().name(), name);
        }
        assert!("x-slope".parse::<IgciConfig>().is_err());
    }
}
