//! Benchmark harness: runs inference methods over a corpus and scores them
//! by weighted accuracy, decision-rate curves and wall-clock time.

use std::fmt;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{subsample, CauseEffectPair, Direction};
use crate::error::{Error, Result};
use crate::igci::{igci_decide, IgciConfig};
use crate::infer::{reci_aggregate, Aggregation, Decision, InferenceConfig};
use crate::preprocess::{remove_low_density, BandwidthRule, ScalingKind};
use crate::regress::{ModelSpec, SplitConfig};
use crate::seed;

/// An inference method, written `reci:<spec>` or `igci:<variant>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Method {
    Reci(ModelSpec),
    Igci(IgciConfig),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Reci(spec) => write!(f, "reci:{spec}"),
            Method::Igci(cfg) => write!(f, "igci:{}", cfg.name()),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().split_once(':') {
            Some(("reci", spec)) => Ok(Method::Reci(spec.parse()?)),
            Some(("igci", variant)) => Ok(Method::Igci(variant.parse()?)),
            _ => Err(Error::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Relative density threshold for low-density row removal, if any.
    pub preprocess: Option<f64>,
    /// Pairs with more rows are subsampled to this many.
    pub subsample: Option<usize>,
    pub scaling: ScalingKind,
    pub train_fraction: f64,
    pub runs: usize,
    pub aggregation: Aggregation,
    pub threshold: f64,
    pub master_seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    /// Decision rates at which each method's curve is evaluated.
    pub rates: Vec<f64>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            preprocess: None,
            subsample: Some(500),
            scaling: ScalingKind::Normalize,
            train_fraction: 0.7,
            runs: 1,
            aggregation: Aggregation::AveragedMse,
            threshold: 0.0,
            master_seed: 0,
            workers: 0,
            rates: default_rates(),
        }
    }
}

/// `0.1, 0.2, ..., 1.0`.
pub fn default_rates() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.preprocess {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::InvalidConfig(format!(
                    "density threshold {t} outside [0, 1)"
                )));
            }
        }
        if self.subsample.is_some_and(|n| n < 4) {
            return Err(Error::InvalidConfig(
                "subsample size must be at least 4".into(),
            ));
        }
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
        check_rates(&self.rates)
    }
}

/// Outcome of one method on one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub method: Method,
    pub direction: Option<Direction>,
    pub truth: Option<Direction>,
    pub weight: f64,
    pub confidence: f64,
    /// Method score for `x -> y`: the test MSE of `y` given `x` for RECI.
    pub score_xy: f64,
    /// Method score for `y -> x`.
    pub score_yx: f64,
    pub wall_time_s: f64,
    /// Set when the method failed on this pair; the record then counts as
    /// incorrect.
    pub error: Option<String>,
}

impl PairRecord {
    pub fn is_correct(&self) -> bool {
        self.error.is_none() && self.truth.is_some() && self.direction == self.truth
    }
}

/// Weighted share of records whose decision matches the truth. Missing
/// decisions and failed records count as incorrect.
pub fn accuracy(records: &[PairRecord]) -> Result<f64> {
    let total: f64 = records.iter().map(|r| r.weight).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let correct: f64 = records
        .iter()
        .filter(|r| r.is_correct())
        .map(|r| r.weight)
        .sum();
    Ok(correct / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rate: f64,
    pub accuracy: f64,
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::InvalidConfig(
            "decision rates must lie in (0, 1]".into(),
        ));
    }
    if rates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "decision rates must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Accuracy on the `ceil(rate * M)` most confident records, for each rate.
/// Ties in confidence are broken by pair id and then method, so the curve
/// is deterministic. Failed records rank last.
pub fn decision_rate_curve(records: &[PairRecord], rates: &[f64]) -> Result<Vec<CurvePoint>> {
    check_rates(rates)?;
    let mut ranked: Vec<&PairRecord> = records.iter().collect();
    let rank_conf = |r: &PairRecord| {
        if r.error.is_some() {
            f64::NEG_INFINITY
        } else {
            r.confidence
        }
    };
    ranked.sort_by(|a, b| {
        rank_conf(b)
            .total_cmp(&rank_conf(a))
            .then_with(|| a.pair_id.cmp(&b.pair_id))
            .then_with(|| a.method.to_string().cmp(&b.method.to_string()))
    });
    let m = ranked.len();
    rates
        .iter()
        .map(|&rate| {
            // guard against products such as 0.3 * 10 = 3.0000000000000004
            let take = ((rate * m as f64) - 1e-9).ceil().max(1.0) as usize;
            let subset: Vec<PairRecord> =
                ranked[..take.min(m)].iter().map(|&r| r.clone()).collect();
            Ok(CurvePoint {
                rate,
                accuracy: accuracy(&subset)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub accuracy: f64,
    pub decided: usize,
    pub failed: usize,
    pub curve: Vec<CurvePoint>,
    pub mean_time_s: f64,
    pub std_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub methods: Vec<Method>,
    pub pairs: usize,
    /// How records without a decision are scored.
    pub no_decision_policy: String,
    pub records: Vec<PairRecord>,
    pub summaries: Vec<MethodSummary>,
}

impl BenchmarkReport {
    /// Copy with every timing field zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.records {
            r.wall_time_s = 0.0;
        }
        for s in &mut out.summaries {
            s.mean_time_s = 0.0;
            s.std_time_s = 0.0;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One CSV row per record.
    pub fn records_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "pair_id",
            "method",
            "direction",
            "truth",
            "weight",
            "confidence",
            "score_xy",
            "score_yx",
            "wall_time_s",
            "error",
        ])?;
        let dir = |d: Option<Direction>| d.map(|d| d.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.pair_id.clone(),
                r.method.to_string(),
                dir(r.direction),
                dir(r.truth),
                r.weight.to_string(),
                r.confidence.to_string(),
                r.score_xy.to_string(),
                r.score_yx.to_string(),
                r.wall_time_s.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn run_one(pair: &CauseEffectPair, method: &Method, cfg: &BenchmarkConfig) -> Result<Decision> {
    let pair_seed = seed::derive(cfg.master_seed, seed::hash_str(&pair.id));
    let mut pair = match cfg.preprocess {
        Some(t) => remove_low_density(pair, t, BandwidthRule::Silverman)?,
        None => pair.clone(),
    };
    if let Some(n) = cfg.subsample {
        pair = subsample(&pair, n, seed::derive(pair_seed, 0));
    }
    match method {
        Method::Reci(spec) => {
            let inference = InferenceConfig {
                spec: spec.clone(),
                scaling: cfg.scaling,
                train_fraction: cfg.train_fraction,
                runs: cfg.runs,
                aggregation: cfg.aggregation,
                threshold: cfg.threshold,
                seed: seed::derive(pair_seed, 1),
            };
            reci_aggregate(&pair, &inference)
        }
        Method::Igci(variant) => igci_decide(&pair, variant),
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs every method on every pair. Failures on single pairs are recorded
/// rather than returned. Decisions depend only on the pair ids, their data
/// and `cfg.master_seed`.
pub fn run_benchmark(
    corpus: &[CauseEffectPair],
    methods: &[Method],
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods given".into()));
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let jobs: Vec<(&CauseEffectPair, &Method)> = corpus
        .iter()
        .flat_map(|p| methods.iter().map(move |m| (p, m)))
        .collect();
    let mut records: Vec<PairRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(pair, method)| {
                let start = Instant::now();
                let outcome = run_one(pair, method, cfg);
                let wall_time_s = start.elapsed().as_secs_f64();
                let (decision, error) = match outcome {
                    Ok(d) => (d, None),
                    Err(e) => (
                        Decision {
                            direction: None,
                            mse_y_given_x: f64::NAN,
                            mse_x_given_y: f64::NAN,
                            confidence: 0.0,
                        },
                        Some(e.to_string()),
                    ),
                };
                PairRecord {
                    pair_id: pair.id.clone(),
                    method: method.clone(),
                    direction: decision.direction,
                    truth: pair.truth(),
                    weight: pair.weight(),
                    confidence: decision.confidence,
                    score_xy: decision.mse_y_given_x,
                    score_yx: decision.mse_x_given_y,
                    wall_time_s,
                    error,
                }
            })
            .collect()
    });
    records.sort_by(|a, b| {
        a.pair_id
            .cmp(&b.pair_id)
            .then_with(|| a.method.to_string().cmp(&b.method.to_string()))
    });

    let summaries = methods
        .iter()
        .map(|method| {
            let own: Vec<PairRecord> = records
                .iter()
                .filter(|r| &r.method == method)
                .cloned()
                .collect();
            let times: Vec<f64> = own.iter().map(|r| r.wall_time_s).collect();
            let (mean_time_s, std_time_s) = mean_std(&times);
            Ok(MethodSummary {
                method: method.clone(),
                accuracy: accuracy(&own)?,
                decided: own.iter().filter(|r| r.direction.is_some()).count(),
                failed: own.iter().filter(|r| r.error.is_some()).count(),
                curve: decision_rate_curve(&own, &cfg.rates)?,
                mean_time_s,
                std_time_s,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BenchmarkReport {
        config: cfg.clone(),
        methods: methods.to_vec(),
        pairs: corpus.len(),
        no_decision_policy: "incorrect".into(),
        records,
        summaries,
    })
}

/// A named polyline for [`svg_line_plot`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Renders the series as a standalone SVG line chart with the y axis fixed
/// to `[0, 1]`.
pub fn svg_line_plot(series: &[Series], x_label: &str, y_label: &str) -> String {
    let (w, h, margin) = (640.0, 400.0, 50.0);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x_lo, mut x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    if !(x_hi > x_lo) {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    let px = |x: f64| margin + (x - x_lo) / (x_hi - x_lo) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - y.clamp(0.0, 1.0) * (h - 2.0 * margin);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="{margin}" y="{margin}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * margin,
        h - 2.0 * margin
    );
    for tick in 0..=4 {
        let y = tick as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.2}</text>"#,
            margin - 4.0,
            py(y) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{margin}" y="{}">{x_lo:.3}</text><text x="{}" y="{}" text-anchor="end">{x_hi:.3}</text>"#,
        h - margin + 16.0,
        w - margin,
        h - margin + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - margin - 120.0,
            margin + 16.0 * (i as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
