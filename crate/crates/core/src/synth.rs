//! Synthetic cause-effect pairs whose cause and noise share hidden sources.
//!
//! Two sources `S1, S2` are drawn from randomly chosen distributions and
//! centered by their analytic means. Cause and noise are random convex
//! combinations of transformed sources:
//!
//! ```text
//! C' = w1 f1(S1) + (1 - w1) f2(S2)        C = normalize(C')
//! N' = w2 f3(S1) + (1 - w2) f4(S2)        N = alpha * standardize(N')
//! E  = phi(C) + N
//! ```
//!
//! with `f_i` drawn from {identity, exp, random sigmoid mixture}.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::data::{CauseEffectPair, Direction};
use crate::error::{Error, Result};
use crate::preprocess::{min_max, normalize, standardize};
use crate::seed::{self, Rng};

/// Standard normal CDF.
pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Distribution of a hidden source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceDist {
    Uniform01,
    Gauss {
        mu: f64,
        sigma: f64,
    },
    /// Equal-weight mixture of N(0.3, 0.1^2) and N(0.7, 0.1^2).
    GaussMixture,
}

impl SourceDist {
    pub const GAUSS_MEANS: [f64; 3] = [0.0, 0.5, 1.0];

    pub fn mean(&self) -> f64 {
        match self {
            SourceDist::Uniform01 => 0.5,
            SourceDist::Gauss { mu, .. } => *mu,
            SourceDist::GaussMixture => 0.5,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            SourceDist::Uniform01 => rng.random::<f64>(),
            SourceDist::Gauss { mu, sigma } => {
                Normal::new(mu, sigma).expect("sigma > 0").sample(rng)
            }
            SourceDist::GaussMixture => {
                let mu = if rng.random::<bool>() { 0.3 } else { 0.7 };
                Normal::new(mu, 0.1).expect("sigma > 0").sample(rng)
            }
        }
    }

    /// One of the five table distributions, uniformly; Gaussian widths are
    /// drawn from `U(0.1, 1)`.
    pub fn random(rng: &mut Rng) -> Self {
        match rng.random_range(0..5) {
            0 => SourceDist::Uniform01,
            k @ 1..=3 => SourceDist::Gauss {
                mu: Self::GAUSS_MEANS[k - 1],
                sigma: rng.random_range(0.1..1.0),
            },
            _ => SourceDist::GaussMixture,
        }
    }
}

/// `s(c) = sum_i beta_i * Phi((c - mu_i) / sigma_i)`, a non-decreasing
/// mixture of Gaussian CDFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidMixture {
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl SigmoidMixture {
    pub const SIGMA_MIN: f64 = 1e-3;
    pub const SIGMA_MAX: f64 = 0.1;

    pub fn eval(&self, c: f64) -> f64 {
        self.beta
            .iter()
            .zip(&self.mu)
            .zip(&self.sigma)
            .map(|((b, m), s)| b * norm_cdf((c - m) / s))
            .sum()
    }

    pub fn derivative(&self, c: f64) -> f64 {
        self.beta
            .iter()
            .zip(&self.mu)
            .zip(&self.sigma)
            .map(|((b, m), s)| b * norm_pdf((c - m) / s) / s)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub(crate) fn sample_with(n: usize, rng: &mut Rng) -> Self {
        let mut beta = Vec::with_capacity(n);
        let mut mu = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        for _ in 0..n {
            beta.push(rng.random::<f64>());
            mu.push(rng.random::<f64>());
            sigma.push(rng.random_range(Self::SIGMA_MIN..=Self::SIGMA_MAX));
        }
        Self { beta, mu, sigma }
    }
}

/// Random sigmoid mixture with `beta_i, mu_i ~ U(0, 1)` and
/// `sigma_i ~ U(1e-3, 0.1)`.
pub fn sample_sigmoid_mixture(n: usize, seed_value: u64) -> SigmoidMixture {
    SigmoidMixture::sample_with(n.max(1), &mut seed::rng(seed_value))
}

/// Affine map of `v` sending `min(v)` to `a` and `max(v)` to `b`.
pub fn rescale_interval(v: &[f64], a: f64, b: f64) -> Result<Vec<f64>> {
    let (lo, hi) = min_max(v);
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    let k = (b - a) / (hi - lo);
    Ok(v.iter()
        .map(|&x| if x == hi { b } else { a + (x - lo) * k })
        .collect())
}

/// Transform applied to a centered source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceTransform {
    Identity,
    Exp,
    Sigmoid(SigmoidMixture),
}

impl SourceTransform {
    fn apply(&self, v: f64) -> f64 {
        match self {
            SourceTransform::Identity => v,
            SourceTransform::Exp => v.exp(),
            SourceTransform::Sigmoid(s) => s.eval(v),
        }
    }

    fn random(rng: &mut Rng) -> Self {
        match rng.random_range(0..3) {
            0 => SourceTransform::Identity,
            1 => SourceTransform::Exp,
            _ => SourceTransform::Sigmoid(SigmoidMixture::sample_with(5, rng)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonInvertibleShape {
    /// `rescale(C, -2, 2)^2`
    Square,
    /// `rescale(C, -2, 2)^4`
    Quartic,
    /// `sin(rescale(C, -2 pi, 2 pi))`
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Linear,
    Invertible,
    /// `None` draws the shape per pair.
    NonInvertible(Option<NonInvertibleShape>),
}

impl std::str::FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(GenKind::Linear),
            "invertible" => Ok(GenKind::Invertible),
            "noninvertible" | "non-invertible" => Ok(GenKind::NonInvertible(None)),
            "square" => Ok(GenKind::NonInvertible(Some(NonInvertibleShape::Square))),
            "quartic" => Ok(GenKind::NonInvertible(Some(NonInvertibleShape::Quartic))),
            "sine" => Ok(GenKind::NonInvertible(Some(NonInvertibleShape::Sine))),
            _ => Err(Error::InvalidConfig(format!(
                "unknown generator kind `{s}`"
            ))),
        }
    }
}

impl GenKind {
    pub fn name(&self) -> &'static str {
        match self {
            GenKind::Linear => "linear",
            GenKind::Invertible => "invertible",
            GenKind::NonInvertible(_) => "noninvertible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub kind: GenKind,
    pub alpha: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// The function linking cause to effect in a generated pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectFunction {
    Identity,
    Sigmoid(SigmoidMixture),
    NonInvertible { shape: NonInvertibleShape },
}

impl EffectFunction {
    /// Evaluates on normalized cause values in `[0, 1]`.
    pub fn eval(&self, c: f64) -> f64 {
        match self {
            EffectFunction::Identity => c,
            EffectFunction::Sigmoid(s) => s.eval(c),
            EffectFunction::NonInvertible { shape } => match shape {
                NonInvertibleShape::Square => (4.0 * c - 2.0).powi(2),
                NonInvertibleShape::Quartic => (4.0 * c - 2.0).powi(4),
                NonInvertibleShape::Sine => {
                    let tau = 2.0 * std::f64::consts::PI;
                    (2.0 * tau * c - tau).sin()
                }
            },
        }
    }
}

/// Everything drawn while generating one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedModel {
    pub config: GenConfig,
    pub phi: EffectFunction,
    pub sources: [SourceDist; 2],
    pub transforms: [SourceTransform; 4],
    pub w1: f64,
    pub w2: f64,
    /// Number of redraws caused by degenerate (constant) mixtures.
    pub redraws: usize,
}

const MAX_REDRAWS: usize = 10;

/// Generates one labelled pair (`x` is the cause). Deterministic in `cfg`.
pub fn generate_pair(cfg: &GenConfig) -> Result<(CauseEffectPair, GeneratedModel)> {
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::InvalidConfig(format!(
            "alpha {} outside [0, 1]",
            cfg.alpha
        )));
    }
    if cfg.n_samples < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: cfg.n_samples,
        });
    }
    let mut rng = seed::rng(cfg.seed);
    let n = cfg.n_samples;
    for redraws in 0..=MAX_REDRAWS {
        let w1: f64 = rng.random();
        let w2: f64 = rng.random();
        let sources = [SourceDist::random(&mut rng), SourceDist::random(&mut rng)];
        let transforms = [
            SourceTransform::random(&mut rng),
            SourceTransform::random(&mut rng),
            SourceTransform::random(&mut rng),
            SourceTransform::random(&mut rng),
        ];
        let phi = match cfg.kind {
            GenKind::Linear => EffectFunction::Identity,
            GenKind::Invertible => {
                EffectFunction::Sigmoid(SigmoidMixture::sample_with(5, &mut rng))
            }
            GenKind::NonInvertible(shape) => {
                let shape = shape.unwrap_or_else(|| match rng.random_range(0..3) {
                    0 => NonInvertibleShape::Square,
                    1 => NonInvertibleShape::Quartic,
                    _ => NonInvertibleShape::Sine,
                });
                EffectFunction::NonInvertible { shape }
            }
        };

        let mut c_raw = Vec::with_capacity(n);
        let mut n_raw = Vec::with_capacity(n);
        for _ in 0..n {
            let s1 = sources[0].sample(&mut rng) - sources[0].mean();
            let s2 = sources[1].sample(&mut rng) - sources[1].mean();
            c_raw.push(w1 * transforms[0].apply(s1) + (1.0 - w1) * transforms[1].apply(s2));
            n_raw.push(w2 * transforms[2].apply(s1) + (1.0 - w2) * transforms[3].apply(s2));
        }
        let (Ok(cause), Ok(noise)) = (normalize(&c_raw), standardize(&n_raw)) else {
            continue;
        };
        let effect: Vec<f64> = cause
            .iter()
            .zip(&noise)
            .map(|(&c, &nz)| phi.eval(c) + cfg.alpha * nz)
            .collect();
        let id = format!("{}-a{:.3}-s{}", cfg.kind.name(), cfg.alpha, cfg.seed);
        let pair = CauseEffectPair::new(id, cause, effect)?.with_truth(Direction::XtoY);
        let model = GeneratedModel {
            config: *cfg,
            phi,
            sources,
            transforms,
            w1,
            w2,
            redraws,
        };
        return Ok((pair, model));
    }
    Err(Error::DegenerateRange)
}
