//! Numerical checks of the small-noise error asymmetry.
//!
//! A [`SyntheticModel`] describes a cause `C` on `[0, 1]`, a monotone link
//! `phi` with `phi(0) = 0`, `phi(1) = 1`, and noise `N` with conditional
//! variance `Var[N | c]`. For `E = phi(C) + alpha N` rescaled onto `[0, 1]`,
//! the ratio `E[Var[C | E]] / E[Var[E | C]]` tends to
//! `int (1 / phi'(c)^2) Var[N | c] p_C(c) dc` as `alpha -> 0`, and that limit
//! is at least one whenever `phi'` is uncorrelated with `Var[N | c] p_C(c)`.
//! This module computes the limit by quadrature, estimates the ratio by
//! Monte Carlo, and checks the uncorrelatedness condition.

mod condvar;
pub mod quadrature;

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
use crate::seed;
use crate::synth::SigmoidMixture;

pub use condvar::{expected_conditional_variance, CondVarEstimator};
pub use quadrature::{integrate, Integral};

/// Absolute tolerance of every quadrature in this module.
pub const QUAD_TOL: f64 = 1e-8;
/// `phi'` below this on the check grid makes the limit non-integrable.
pub const MIN_SLOPE: f64 = 1e-9;
const GRID: usize = 10_000;

pub type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Distribution of the cause on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CauseDist {
    Uniform,
    Beta { a: f64, b: f64 },
}

impl CauseDist {
    pub fn density(&self, c: f64) -> f64 {
        if !(0.0..=1.0).contains(&c) {
            return 0.0;
        }
        match *self {
            CauseDist::Uniform => 1.0,
            CauseDist::Beta { a, b } => {
                ((a - 1.0) * c.ln() + (b - 1.0) * (1.0 - c).ln() - ln_beta(a, b)).exp()
            }
        }
    }

    fn sample(&self, rng: &mut seed::Rng) -> f64 {
        match *self {
            CauseDist::Uniform => rng.random::<f64>(),
            CauseDist::Beta { a, b } => Beta::new(a, b).expect("positive shapes").sample(rng),
        }
    }
}

/// Shape of the standardized noise (zero mean, unit variance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseShape {
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
    /// Symmetric Beta(2, 2) on `[-sqrt 5, sqrt 5]`.
    Beta22,
    /// Standard normal. Unbounded support, so the compact-support assumption
    /// does not hold; the rescaling uses the sample range instead.
    Gaussian,
}

impl NoiseShape {
    /// Half-width of the support, `None` when unbounded.
    pub fn half_width(&self) -> Option<f64> {
        match self {
            NoiseShape::Uniform => Some(3f64.sqrt()),
            NoiseShape::Beta22 => Some(5f64.sqrt()),
            NoiseShape::Gaussian => None,
        }
    }

    fn sample(&self, rng: &mut seed::Rng) -> f64 {
        match self {
            NoiseShape::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
            NoiseShape::Beta22 => {
                let b: f64 = Beta::new(2.0, 2.0).expect("valid").sample(rng);
                (b - 0.5) * 20f64.sqrt()
            }
            NoiseShape::Gaussian => rng.sample(StandardNormal),
        }
    }
}

/// Closed-form description of a cause-effect model used by the checks.
#[derive(Clone)]
pub struct SyntheticModel {
    pub id: String,
    phi: Curve,
    phi_prime: Curve,
    noise_variance: Curve,
    pub cause: CauseDist,
    pub noise: NoiseShape,
    /// Whether `phi` is the identity.
    pub linear: bool,
}

impl fmt::Debug for SyntheticModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SyntheticModel")
            .field("id", &self.id)
            .field("cause", &self.cause)
            .field("noise", &self.noise)
            .field("linear", &self.linear)
            .finish_non_exhaustive()
    }
}

impl SyntheticModel {
    /// Model with uniform cause and uniform noise of constant unit variance.
    pub fn new(id: impl Into<String>, phi: Curve, phi_prime: Curve) -> Self {
        Self {
            id: id.into(),
            phi,
            phi_prime,
            noise_variance: Arc::new(|_| 1.0),
            cause: CauseDist::Uniform,
            noise: NoiseShape::Uniform,
            linear: false,
        }
    }

    /// `phi(c) = c`.
    pub fn linear() -> Self {
        let mut m = Self::new("linear", Arc::new(|c| c), Arc::new(|_| 1.0));
        m.linear = true;
        m
    }

    /// `phi(c) = (c + c^2) / 2`.
    pub fn half_quadratic() -> Self {
        Self::new(
            "half-quadratic",
            Arc::new(|c| 0.5 * (c + c * c)),
            Arc::new(|c| 0.5 + c),
        )
    }

    /// `phi(c) = c^p`.
    pub fn power(p: f64) -> Self {
        Self::new(
            format!("power-{p}"),
            Arc::new(move |c: f64| c.powf(p)),
            Arc::new(move |c: f64| p * c.powf(p - 1.0)),
        )
    }

    /// `phi(c) = (s(c) - s(0)) / (s(1) - s(0))` for a sigmoid mixture `s`.
    pub fn sigmoid(id: impl Into<String>, s: SigmoidMixture) -> Self {
        let s = Arc::new(s);
        let lo = s.eval(0.0);
        let span = s.eval(1.0) - lo;
        let (s1, s2) = (Arc::clone(&s), s);
        Self::new(
            id,
            Arc::new(move |c| (s1.eval(c) - lo) / span),
            Arc::new(move |c| s2.derivative(c) / span),
        )
    }

    pub fn with_noise_variance(mut self, v: Curve) -> Self {
        self.noise_variance = v;
        self
    }

    pub fn with_cause(mut self, cause: CauseDist) -> Self {
        self.cause = cause;
        self
    }

    pub fn with_noise(mut self, noise: NoiseShape) -> Self {
        self.noise = noise;
        self
    }

    pub fn phi(&self, c: f64) -> f64 {
        (self.phi)(c)
    }

    pub fn phi_prime(&self, c: f64) -> f64 {
        (self.phi_prime)(c)
    }

    pub fn noise_variance(&self, c: f64) -> f64 {
        (self.noise_variance)(c)
    }

    pub fn cause_density(&self, c: f64) -> f64 {
        self.cause.density(c)
    }

    /// Checks the link endpoints and slope, the normalization of `p_C` and
    /// `E[Var[N | C]] = 1`.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: String| Err(Error::InvalidConfig(format!("{}: {what}", self.id)));
        if self.phi(0.0).abs() > 1e-9 || (self.phi(1.0) - 1.0).abs() > 1e-9 {
            return fail("phi must map 0 to 0 and 1 to 1".into());
        }
        for i in 1..GRID {
            let c = i as f64 / GRID as f64;
            if !(self.phi_prime(c) > 0.0) {
                return fail(format!("phi' not positive at {c}"));
            }
        }
        let mass = integrate(|c| self.cause_density(c), 0.0, 1.0, QUAD_TOL).value;
        if (mass - 1.0).abs() > 1e-6 {
            return fail(format!("cause density integrates to {mass}"));
        }
        let ev = expected_noise_variance(self);
        if (ev - 1.0).abs() > 1e-6 {
            return fail(format!("expected conditional noise variance is {ev}"));
        }
        Ok(())
    }

    /// Support `[n_minus, n_plus]` of the noise, `None` when unbounded.
    pub fn noise_support(&self) -> Option<(f64, f64)> {
        let half = self.noise.half_width()?;
        let sd = (0..=GRID)
            .map(|i| self.noise_variance(i as f64 / GRID as f64).sqrt())
            .fold(0.0, f64::max);
        Some((-half * sd, half * sd))
    }
}

fn expected_noise_variance(model: &SyntheticModel) -> f64 {
    integrate(
        |c| model.noise_variance(c) * model.cause_density(c),
        0.0,
        1.0,
        QUAD_TOL,
    )
    .value
}

/// `int_0^1 Var[N | c] p_C(c) / phi'(c)^2 dc` at absolute tolerance `tol`.
pub fn variance_ratio_limit_with_tol(model: &SyntheticModel, tol: f64) -> Result<f64> {
    for i in 0..=GRID {
        let c = i as f64 / GRID as f64;
        if !(model.phi_prime(c) >= MIN_SLOPE) {
            return Err(Error::NonIntegrable(c));
        }
    }
    let r = integrate(
        |c| {
            let d = model.phi_prime(c);
            model.noise_variance(c) * model.cause_density(c) / (d * d)
        },
        0.0,
        1.0,
        tol,
    );
    if !r.value.is_finite() {
        return Err(Error::NonIntegrable(f64::NAN));
    }
    Ok(r.value)
}

/// Small-noise limit of the conditional variance ratio.
pub fn variance_ratio_limit(model: &SyntheticModel) -> Result<f64> {
    variance_ratio_limit_with_tol(model, QUAD_TOL)
}

/// Covariance of `phi'` and `Var[N | c] p_C(c)` under the uniform measure
/// on `[0, 1]`, together with the integrals it is made of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCheck {
    pub covariance: f64,
    /// `int phi' Var[N|c] p_C dc`; equals one when the covariance vanishes
    /// and the model is valid.
    pub weighted_slope_integral: f64,
    pub slope_integral: f64,
    pub variance_integral: f64,
}

pub fn independence_covariance(model: &SyntheticModel) -> IndependenceCheck {
    let weighted = integrate(
        |c| model.phi_prime(c) * model.noise_variance(c) * model.cause_density(c),
        0.0,
        1.0,
        QUAD_TOL,
    )
    .value;
    let slope = integrate(|c| model.phi_prime(c), 0.0, 1.0, QUAD_TOL).value;
    let var = expected_noise_variance(model);
    IndependenceCheck {
        covariance: weighted - slope * var,
        weighted_slope_integral: weighted,
        slope_integral: slope,
        variance_integral: var,
    }
}

/// Monte Carlo samples of `(C, E~)` for noise level `alpha`, with `E~`
/// shifted and rescaled onto the unit interval.
pub fn sample_model(
    model: &SyntheticModel,
    alpha: f64,
    n_samples: usize,
    seed_value: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let mut rng = seed::rng(seed_value);
    let mut cause = Vec::with_capacity(n_samples);
    let mut effect = Vec::with_capacity(n_samples);
    let mut noise = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let c = model.cause.sample(&mut rng);
        let n = model.noise_variance(c).sqrt() * model.noise.sample(&mut rng);
        cause.push(c);
        noise.push(n);
        effect.push(model.phi(c) + alpha * n);
    }
    let (n_minus, n_plus) = match model.noise_support() {
        Some(s) => s,
        None => crate::preprocess::min_max(&noise),
    };
    let scale = 1.0 / (1.0 + alpha * (n_plus - n_minus));
    for e in &mut effect {
        *e = (*e - alpha * n_minus) * scale;
    }
    Ok((cause, effect))
}

/// Monte Carlo estimate of `E[Var[C | E~]] / E[Var[E~ | C]]`.
pub fn mc_variance_ratio(
    model: &SyntheticModel,
    alpha: f64,
    n_samples: usize,
    estimator: CondVarEstimator,
    seed_value: u64,
) -> Result<f64> {
    let (cause, effect) = sample_model(model, alpha, n_samples, seed_value)?;
    let backward = expected_conditional_variance(&cause, &effect, estimator)?;
    let forward = expected_conditional_variance(&effect, &cause, estimator)?;
    Ok(backward / forward)
}

/// `count` models with normalized random 5-component sigmoid links,
/// uniform cause and constant unit noise variance.
pub fn sigmoid_family(count: usize, seed_value: u64) -> Vec<SyntheticModel> {
    (0..count)
        .map(|i| {
            let s = crate::synth::sample_sigmoid_mixture(5, seed::derive(seed_value, i as u64));
            SyntheticModel::sigmoid(format!("sigmoid-{i}"), s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub model: String,
    pub linear: bool,
    pub alpha: f64,
    pub mc_ratio: f64,
    /// Quadrature limit; `None` when the link is too flat somewhere.
    pub limit: Option<f64>,
    pub covariance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub rows: Vec<TheoryRow>,
    pub tolerance: f64,
    /// Models whose ratio at the smallest alpha is below `1 - tolerance`.
    pub violations: Vec<String>,
    /// Share of nonlinear models with ratio above `1 + tolerance` at the
    /// smallest alpha.
    pub nonlinear_above: f64,
}

impl TheoryReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "model",
            "linear",
            "alpha",
            "mc_ratio",
            "limit",
            "covariance",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.model.clone(),
                r.linear.to_string(),
                r.alpha.to_string(),
                r.mc_ratio.to_string(),
                r.limit.map(|v| v.to_string()).unwrap_or_default(),
                r.covariance.to_string(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremCheckConfig {
    pub n_samples: usize,
    pub estimator: CondVarEstimator,
    pub seed: u64,
    /// Allowed shortfall below one at the smallest alpha.
    pub tolerance: f64,
}

impl Default for TheoremCheckConfig {
    fn default() -> Self {
        Self {
            n_samples: 200_000,
            estimator: CondVarEstimator::default(),
            seed: 0,
            tolerance: 0.02,
        }
    }
}

/// Runs the Monte Carlo ratio for every model and alpha. Every model must
/// satisfy the independence postulate (`|cov| < 1e-6`). All alphas of one
/// model share the same random draws.
pub fn verify_theorem(
    models: &[SyntheticModel],
    alphas: &[f64],
    cfg: &TheoremCheckConfig,
) -> Result<TheoryReport> {
    if models.is_empty() || alphas.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one model and one alpha".into(),
        ));
    }
    let checks: Vec<IndependenceCheck> = models.par_iter().map(independence_covariance).collect();
    if let Some(bad) = checks.iter().find(|c| c.covariance.abs() >= 1e-6) {
        return Err(Error::PostulateViolated(bad.covariance));
    }
    let limits: Vec<Option<f64>> = models
        .par_iter()
        .map(|m| variance_ratio_limit(m).ok())
        .collect();

    let jobs: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|m| alphas.iter().map(move |&a| (m, a)))
        .collect();
    let ratios: Vec<f64> = jobs
        .par_iter()
        .map(|&(m, a)| {
            mc_variance_ratio(
                &models[m],
                a,
                cfg.n_samples,
                cfg.estimator,
                seed::derive(cfg.seed, m as u64),
            )
        })
        .collect::<Result<_>>()?;

    let rows: Vec<TheoryRow> = jobs
        .iter()
        .zip(&ratios)
        .map(|(&(m, alpha), &mc_ratio)| TheoryRow {
            model: models[m].id.clone(),
            linear: models[m].linear,
            alpha,
            mc_ratio,
            limit: limits[m],
            covariance: checks[m].covariance,
        })
        .collect();

    let smallest = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let at_smallest: Vec<&TheoryRow> = rows.iter().filter(|r| r.alpha == smallest).collect();
    let violations = at_smallest
        .iter()
        .filter(|r| r.mc_ratio < 1.0 - cfg.tolerance)
        .map(|r| r.model.clone())
        .collect();
    let nonlinear: Vec<&&TheoryRow> = at_smallest.iter().filter(|r| !r.linear).collect();
    let nonlinear_above = if nonlinear.is_empty() {
        0.0
    } else {
        nonlinear
            .iter()
            .filter(|r| r.mc_ratio > 1.0 + cfg.tolerance)
            .count() as f64
            / nonlinear.len() as f64
    };
    Ok(TheoryReport {
        rows,
        tolerance: cfg.tolerance,
        violations,
        nonlinear_above,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_limit_is_one() {
        let v = variance_ratio_limit(&SyntheticModel::linear()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_link_is_not_integrable() {
        assert!(matches!(
            variance_ratio_limit(&SyntheticModel::power(2.0)),
            Err(Error::NonIntegrable(c)) if c == 0.0
        ));
    }

    #[test]
    fn builtin_models_validate() {
        SyntheticModel::linear().validate().unwrap();
        SyntheticModel::half_quadratic().validate().unwrap();
        for m in sigmoid_family(5, 1) {
            m.validate().unwrap();
        }
        let bad = SyntheticModel::linear().with_noise_variance(Arc::new(|_| 2.0));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn beta_cause_density_normalized() {
        let d = CauseDist::Beta { a: 2.0, b: 3.0 };
        let mass = integrate(|c| d.density(c), 0.0, 1.0, 1e-10).value;
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noise_shapes_have_unit_variance() {
        let mut rng = seed::rng(9);
        for shape in [
            NoiseShape::Uniform,
            NoiseShape::Beta22,
            NoiseShape::Gaussian,
        ] {
            let n = 200_000;
            let s: Vec<f64> = (0..n).map(|_| shape.sample(&mut rng)).collect();
            let m = s.iter().sum::<f64>() / n as f64;
            let v = s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
            assert!(
                m.abs() < 0.01 && (v - 1.0).abs() < 0.02,
                "{shape:?}: {m} {v}"
            );
            if let Some(h) = shape.half_width() {
                assert!(s.iter().all(|x| x.abs() <= h));
            }
        }
    }

    #[test]
    fn rescaled_effect_spans_unit_interval() {
        let (_, e) = sample_model(&SyntheticModel::half_quadratic(), 0.1, 10_000, 2).unwrap();
        let (lo, hi) = crate::preprocess::min_max(&e);
        assert!(lo >= 0.0 && hi <= 1.0);
        assert!(lo < 0.02 && hi > 0.98);
    }

    #[test]
    fn postulate_violation_rejected() {
        let m = SyntheticModel::half_quadratic()
            .with_noise_variance(Arc::new(|c| (0.5 + c) * 12.0 / 13.0));
        let cfg = TheoremCheckConfig {
            n_samples: 1000,
            ..Default::default()
        };
        assert!(matches!(
            verify_theorem(&[m], &[0.1], &cfg),
            Err(Error::PostulateViolated(_))
        ));
    }
}
