//! Regression model classes, least-squares fitting, test error and
//! train/test splitting.

mod linalg;
mod logistic;
mod nn;
mod svr;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use linalg::{lstsq, Matrix};

/// Regression function class, fitted identically in both directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    /// `a + (b - a) / (1 + exp(c (d - x)))`
    Log,
    /// `a x^n + b`, `n` in `2..=9`
    Mon(u32),
    /// `sum_{i<=k} a_i x^i`, `k` in `1..=9`
    Poly(u32),
    /// Linear support vector regression.
    Svr,
    /// Feed-forward network with one or two tanh hidden layers.
    Nn(Vec<usize>),
}

impl ModelSpec {
    /// Default hidden layouts for [`ModelSpec::Nn`].
    pub const NN_LAYOUTS: [&'static [usize]; 6] = [&[2], &[5], &[10], &[20], &[2, 4], &[4, 8]];

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ModelSpec::Mon(n) => (2..=9).contains(n),
            ModelSpec::Poly(k) => (1..=9).contains(k),
            ModelSpec::Nn(layers) => {
                (1..=2).contains(&layers.len()) && layers.iter().all(|&h| h > 0)
            }
            ModelSpec::Log | ModelSpec::Svr => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(self.to_string()))
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            ModelSpec::Log => 4,
            ModelSpec::Mon(_) | ModelSpec::Svr => 2,
            ModelSpec::Poly(k) => *k as usize + 1,
            ModelSpec::Nn(layers) => nn::param_count(layers),
        }
    }

    /// Whether the fit is iterative (and may stop before converging).
    pub fn is_iterative(&self) -> bool {
        matches!(self, ModelSpec::Log | ModelSpec::Svr | ModelSpec::Nn(_))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Log => f.write_str("log"),
            ModelSpec::Mon(n) => write!(f, "mon{n}"),
            ModelSpec::Poly(k) => write!(f, "poly{k}"),
            ModelSpec::Svr => f.write_str("svr"),
            ModelSpec::Nn(layers) => {
                let parts: Vec<String> = layers.iter().map(usize::to_string).collect();
                write!(f, "nn{}", parts.join("-"))
            }
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Accepts `log`, `mon<n>`, `poly<k>`, `svr`, `nn<h>` and `nn<h1>-<h2>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let spec = if lower == "log" {
            ModelSpec::Log
        } else if lower == "svr" {
            ModelSpec::Svr
        } else if let Some(rest) = lower.strip_prefix("mon") {
            ModelSpec::Mon(rest.parse().map_err(|_| bad())?)
        } else if let Some(rest) = lower.strip_prefix("poly") {
            ModelSpec::Poly(rest.parse().map_err(|_| bad())?)
        } else if let Some(rest) = lower.strip_prefix("nn") {
            let layers = rest
                .trim_start_matches(':')
                .split('-')
                .map(|p| p.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            ModelSpec::Nn(layers)
        } else {
            return Err(bad());
        };
        spec.validate().map_err(|_| bad())?;
        Ok(spec)
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fitted regression function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    /// Log: `[a, b, c, d]`; Mon: `[a, b]`; Poly: `[a_0, ..., a_k]`;
    /// Svr: `[intercept, slope]`; Nn: flattened weights and biases.
    pub parameters: Vec<f64>,
    /// False when an iterative fit stopped at its iteration cap; the
    /// parameters are then the best found.
    pub converged: bool,
    /// Training loss per iteration for iterative fits, empty otherwise.
    #[serde(skip)]
    pub loss_trace: Vec<f64>,
}

impl FittedModel {
    pub fn predict(&self, x: f64) -> f64 {
        let p = &self.parameters;
        match &self.spec {
            ModelSpec::Log => logistic::eval(p, x),
            ModelSpec::Mon(n) => p[0] * x.powi(*n as i32) + p[1],
            ModelSpec::Poly(_) => p.iter().rev().fold(0.0, |acc, a| acc * x + a),
            ModelSpec::Svr => p[0] + p[1] * x,
            ModelSpec::Nn(layers) => nn::predict(layers, p, x),
        }
    }
}

fn check_inputs(spec: &ModelSpec, x: &[f64], y: &[f64]) -> Result<()> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::InvalidPair(
            "regression inputs differ in length".into(),
        ));
    }
    let needed = spec.param_count() + 1;
    if x.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: x.len(),
        });
    }
    Ok(())
}

/// Least-squares fit of `spec` to `(x, y)`. Deterministic given `seed`.
pub fn fit(spec: &ModelSpec, x: &[f64], y: &[f64], seed: u64) -> Result<FittedModel> {
    check_inputs(spec, x, y)?;
    let model = |parameters, converged, loss_trace| FittedModel {
        spec: spec.clone(),
        parameters,
        converged,
        loss_trace,
    };
    match spec {
        ModelSpec::Poly(k) => {
            let columns: Vec<Vec<f64>> = (0..=*k as i32)
                .map(|i| x.iter().map(|v| v.powi(i)).collect())
                .collect();
            let beta = lstsq(&Matrix::from_columns(&columns), y)?;
            Ok(model(beta, true, Vec::new()))
        }
        ModelSpec::Mon(n) => {
            let columns = vec![
                x.iter().map(|v| v.powi(*n as i32)).collect(),
                vec![1.0; x.len()],
            ];
            let beta = lstsq(&Matrix::from_columns(&columns), y)?;
            Ok(model(beta, true, Vec::new()))
        }
        ModelSpec::Log => {
            let f = logistic::fit(x, y, seed);
            Ok(model(f.params, f.converged, f.trace))
        }
        ModelSpec::Svr => {
            let f = svr::fit(x, y);
            Ok(model(f.params, true, f.trace))
        }
        ModelSpec::Nn(layers) => {
            let f = nn::fit(layers, x, y, seed);
            Ok(model(f.params, f.converged, f.trace))
        }
    }
}

/// `(1/n) sum (y_i - f(x_i))^2`.
pub fn mse(model: &FittedModel, x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    if x.is_empty() {
        return 0.0;
    }
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - model.predict(xi);
            r * r
        })
        .sum();
    ss / x.len() as f64
}

/// Share of rows used for training; the rest is test data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub const FRACTIONS: [f64; 3] = [0.7, 0.5, 0.3];

    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction {train_fraction} outside (0, 1)"
            )));
        }
        Ok(Self {
            train_fraction,
            seed,
        })
    }
}

/// Random disjoint train/test cover of `0..len` with
/// `round(fraction * len)` training rows (clamped so both sides are
/// non-empty). Both index lists are returned in ascending order.
pub fn split(len: usize, cfg: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if len < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: len,
        });
    }
    let n_train = ((cfg.train_fraction * len as f64).round() as usize).clamp(1, len - 1);
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut seed::rng(cfg.seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
