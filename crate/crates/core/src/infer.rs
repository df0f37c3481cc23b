//! Regression-error based causal inference.
//!
//! Both variables are rescaled, the same model class is fitted from `x` to
//! `y` and from `y` to `x` on a shared training split, and the direction
//! with the smaller test MSE is taken to be causal. The confidence of a
//! decision is `1 - min(mse) / max(mse)`; a threshold on it turns the
//! comparison into a rejecting classifier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CauseEffectPair, Direction};
use crate::error::{Error, Result};
use crate::preprocess::{scale, ScalingKind};
use crate::regress::{fit, mse, split, ModelSpec, SplitConfig};
use crate::seed;

/// Outcome of one inference: direction (or `None` for no decision), both
/// test errors and the confidence of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub direction: Option<Direction>,
    pub mse_y_given_x: f64,
    pub mse_x_given_y: f64,
    pub confidence: f64,
}

/// How multiple runs on one pair are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Average each direction's MSE over runs, then compare once.
    AveragedMse,
    /// Decide every run, then take the majority direction.
    PerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub spec: ModelSpec,
    pub scaling: ScalingKind,
    pub train_fraction: f64,
    pub runs: usize,
    pub aggregation: Aggregation,
    /// Minimum confidence required to return a direction.
    pub threshold: f64,
    /// Master seed; run `i` uses `seed::derive(seed, i)`.
    pub seed: u64,
}

impl InferenceConfig {
    pub fn new(spec: ModelSpec) -> Self {
        Self {
            spec,
            scaling: ScalingKind::Normalize,
            train_fraction: 0.7,
            runs: 1,
            aggregation: Aggregation::AveragedMse,
            threshold: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        SplitConfig::new(self.train_fraction, 0)?;
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// `1 - min / max` of two errors.
pub fn confidence(mse_a: f64, mse_b: f64) -> Result<f64> {
    let hi = mse_a.max(mse_b);
    let lo = mse_a.min(mse_b);
    if hi == 0.0 {
        return Err(Error::BothZero);
    }
    Ok(1.0 - lo / hi)
}

/// Compares two test errors, returning a direction only when the
/// confidence reaches `threshold`. Exactly equal errors never decide.
pub fn decide_from_errors(mse_y_given_x: f64, mse_x_given_y: f64, threshold: f64) -> Decision {
    let conf = confidence(mse_y_given_x, mse_x_given_y).unwrap_or(0.0);
    let direction = if mse_y_given_x == mse_x_given_y || conf < threshold {
        None
    } else if mse_y_given_x < mse_x_given_y {
        Some(Direction::XtoY)
    } else {
        Some(Direction::YtoX)
    };
    Decision {
        direction,
        mse_y_given_x,
        mse_x_given_y,
        confidence: conf,
    }
}

/// Errors of one split-and-fit round: `(mse_y_given_x, mse_x_given_y)`.
pub fn run_errors(
    x: &[f64],
    y: &[f64],
    spec: &ModelSpec,
    train_fraction: f64,
    run_seed: u64,
) -> Result<(f64, f64)> {
    let (train, test) = split(x.len(), &SplitConfig::new(train_fraction, run_seed)?)?;
    let pick = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let (xtr, ytr) = (pick(x, &train), pick(y, &train));
    let (xte, yte) = (pick(x, &test), pick(y, &test));
    let fit_seed = seed::derive(run_seed, 1);
    let forward = fit(spec, &xtr, &ytr, fit_seed)?;
    let backward = fit(spec, &ytr, &xtr, fit_seed)?;
    Ok((mse(&forward, &xte, &yte), mse(&backward, &yte, &xte)))
}

fn scaled(pair: &CauseEffectPair, kind: ScalingKind) -> Result<(Vec<f64>, Vec<f64>)> {
    if pair.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: pair.len(),
        });
    }
    Ok((scale(pair.x(), kind)?, scale(pair.y(), kind)?))
}

/// Single-run decision with no rejection: a direction is returned unless
/// the two errors are exactly equal.
pub fn reci_decide(pair: &CauseEffectPair, cfg: &InferenceConfig) -> Result<Decision> {
    let cfg = InferenceConfig {
        threshold: 0.0,
        ..cfg.clone()
    };
    reci_decide_threshold(pair, &cfg)
}

/// Single-run decision rejected when the confidence is below
/// `cfg.threshold`.
pub fn reci_decide_threshold(pair: &CauseEffectPair, cfg: &InferenceConfig) -> Result<Decision> {
    cfg.validate()?;
    let (x, y) = scaled(pair, cfg.scaling)?;
    let (fwd, bwd) = run_errors(
        &x,
        &y,
        &cfg.spec,
        cfg.train_fraction,
        seed::derive(cfg.seed, 0),
    )?;
    Ok(decide_from_errors(fwd, bwd, cfg.threshold))
}

/// Multi-run decision. Runs execute in parallel; their errors are reduced
/// in run order so the result does not depend on scheduling.
pub fn reci_aggregate(pair: &CauseEffectPair, cfg: &InferenceConfig) -> Result<Decision> {
    cfg.validate()?;
    let (x, y) = scaled(pair, cfg.scaling)?;
    let errors: Vec<(f64, f64)> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|i| {
            run_errors(
                &x,
                &y,
                &cfg.spec,
                cfg.train_fraction,
                seed::derive(cfg.seed, i),
            )
        })
        .collect::<Result<_>>()?;
    let runs = errors.len() as f64;
    let fwd = errors.iter().map(|e| e.0).sum::<f64>() / runs;
    let bwd = errors.iter().map(|e| e.1).sum::<f64>() / runs;
    let averaged = decide_from_errors(fwd, bwd, cfg.threshold);
    match cfg.aggregation {
        Aggregation::AveragedMse => Ok(averaged),
        Aggregation::PerRun => {
            let (mut xy, mut yx) = (0usize, 0usize);
            for &(f, b) in &errors {
                match decide_from_errors(f, b, cfg.threshold).direction {
                    Some(Direction::XtoY) => xy += 1,
                    Some(Direction::YtoX) => yx += 1,
                    None => {}
                }
            }
            let direction = match xy.cmp(&yx) {
                std::cmp::Ordering::Greater => Some(Direction::XtoY),
                std::cmp::Ordering::Less => Some(Direction::YtoX),
                std::cmp::Ordering::Equal => None,
            };
            Ok(Decision {
                direction,
                ..averaged
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confidence_examples() {
        assert!((confidence(0.1, 0.2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(confidence(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(confidence(0.0, 0.2).unwrap(), 1.0);
        assert!(matches!(confidence(0.0, 0.0), Err(Error::BothZero)));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(decide_from_errors(0.1, 0.2, 0.6).direction, None);
        let d = decide_from_errors(0.01, 0.2, 0.6);
        assert_eq!(d.direction, Some(Direction::XtoY));
        assert!((d.confidence - 0.95).abs() < 1e-12);
        assert_eq!(
            decide_from_errors(0.2, 0.01, 0.6).direction,
            Some(Direction::YtoX)
        );
        assert_eq!(decide_from_errors(0.2, 0.2, 0.0).direction, None);
        let both_zero = decide_from_errors(0.0, 0.0, 0.0);
        assert_eq!((both_zero.direction, both_zero.confidence), (None, 0.0));
    }

    fn curved_pair() -> CauseEffectPair {
        let x: Vec<f64> = (0..200).map(|i| (i as f64 * 0.618_034).fract()).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| 0.5 * (v + v * v) + 0.02 * ((i as f64 * 1.7).sin()))
            .collect();
        CauseEffectPair::new("curved", x, y).unwrap()
    }

    #[test]
    fn symmetric_fixture_has_no_decision() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 7) % 40) as f64).collect();
        let pair = CauseEffectPair::new("diag", x.clone(), x).unwrap();
        for spec in [ModelSpec::Poly(3), ModelSpec::Log, ModelSpec::Nn(vec![2])] {
            let d = reci_decide(&pair, &InferenceConfig::new(spec)).unwrap();
            assert_eq!(d.direction, None);
            assert_eq!(d.mse_x_given_y, d.mse_y_given_x);
        }
    }

    #[test]
    fn swapping_flips_direction() {
        let pair = curved_pair();
        let cfg = InferenceConfig::new(ModelSpec::Poly(3));
        let a = reci_decide(&pair, &cfg).unwrap();
        let b = reci_decide(&pair.swapped(), &cfg).unwrap();
        assert!(a.direction.is_some());
        assert_eq!(a.direction.map(Direction::flipped), b.direction);
        assert_eq!(a.mse_y_given_x, b.mse_x_given_y);
    }

    #[test]
    fn single_run_aggregate_matches_threshold_decision() {
        let pair = curved_pair();
        for aggregation in [Aggregation::AveragedMse, Aggregation::PerRun] {
            let cfg = InferenceConfig {
                aggregation,
                threshold: 0.1,
                seed: 17,
                ..InferenceConfig::new(ModelSpec::Mon(2))
            };
            assert_eq!(
                reci_aggregate(&pair, &cfg).unwrap(),
                reci_decide_threshold(&pair, &cfg).unwrap()
            );
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = InferenceConfig::new(ModelSpec::Log);
        cfg.runs = 0;
        assert!(cfg.validate().is_err());
        cfg.runs = 1;
        cfg.threshold = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn constant_column_is_degenerate() {
        let pair =
            CauseEffectPair::new("c", vec![1.0; 10], (0..10).map(f64::from).collect()).unwrap();
        assert!(matches!(
            reci_decide(&pair, &InferenceConfig::new(ModelSpec::Poly(1))),
            Err(Error::DegenerateRange)
        ));
    }
}
