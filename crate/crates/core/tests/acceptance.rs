//! Acceptance suite. Runs as a plain binary so that every criterion prints
//! exactly one PASS/FAIL/SKIP line; exits non-zero if a blocking
//! criterion fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use reci_core::bench::{
    accuracy, decision_rate_curve, parse_methods, run_benchmark, BenchmarkConfig, PairRecord,
};
use reci_core::data::{load_dataset, CauseEffectPair, Direction};
use reci_core::infer::{reci_decide, reci_decide_threshold, run_errors, InferenceConfig};
use reci_core::preprocess::{scale, ScalingKind};
use reci_core::regress::{fit, ModelSpec};
use reci_core::seed;
use reci_core::synth::{generate_pair, GenConfig, GenKind};
use reci_core::theory::{
    independence_covariance, mc_variance_ratio, sigmoid_family, variance_ratio_limit,
    verify_theorem, CondVarEstimator, Curve, SyntheticModel, TheoremCheckConfig,
};

/// Seed for the generated corpora of criteria 4, 5 and 10.
const CORPUS_SEED: u64 = 0x5eed_acce;
const PAIRS_PER_ALPHA: u64 = 100;
const SAMPLES_PER_PAIR: usize = 500;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Option<Outcome> {
    Some(Outcome { pass, detail })
}

/// Independent trapezoid rule on a uniform grid.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

fn lemma_limit_agreement() -> Option<Outcome> {
    let model = SyntheticModel::half_quadratic();
    // int Var[N|c] p_C(c) / phi'(c)^2 dc with phi' = (1 + 2c) / 2
    let oracle = trapezoid(|c| 4.0 / (1.0 + 2.0 * c).powi(2), 0.0, 1.0, 2_000_000);
    let limit = variance_ratio_limit(&model).expect("limit");
    let mc = mc_variance_ratio(&model, 0.01, 200_000, CondVarEstimator::default(), 1).expect("mc");
    let rel = (mc - limit).abs() / limit;
    outcome(
        (limit - oracle).abs() < 1e-8 && rel < 0.10,
        format!("limit {limit:.8}, trapezoid {oracle:.8}, monte carlo {mc:.5} (rel. gap {rel:.4})"),
    )
}

fn theorem_property_suite() -> Option<Outcome> {
    let mut models = sigmoid_family(20, 2024);
    models.push(SyntheticModel::linear());
    let cfg = TheoremCheckConfig {
        seed: 7,
        ..TheoremCheckConfig::default()
    };
    let report = verify_theorem(&models, &[0.01], &cfg).expect("theorem suite");
    let nonlinear: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| !r.linear)
        .map(|r| r.mc_ratio)
        .collect();
    let min_nonlinear = nonlinear.iter().cloned().fold(f64::INFINITY, f64::min);
    let linear = report
        .rows
        .iter()
        .find(|r| r.linear)
        .expect("linear row")
        .mc_ratio;
    // exact population value for a linear link with uniform noise of
    // half-width h = sqrt(3) alpha after the unit-interval rescaling
    let h = 3f64.sqrt() * 0.01;
    let linear_exact = (1.0 - h) * (1.0 + 2.0 * h).powi(2);
    let all_above = report.violations.is_empty();
    let share = report.nonlinear_above;
    let linear_ok = (0.95..=1.05).contains(&linear);
    outcome(
        all_above && share >= 0.9 && linear_ok,
        format!(
            "{} nonlinear links: min ratio {min_nonlinear:.3}, share > 1.02 {share:.2}; \
             linear ratio {linear:.4} (exact at this alpha {linear_exact:.4}, required [0.95, 1.05])",
            nonlinear.len()
        ),
    )
}

fn slope_identity() -> Option<Outcome> {
    let mut models = sigmoid_family(20, 99);
    models.push(SyntheticModel::linear());
    models.push(SyntheticModel::half_quadratic());
    models.push(SyntheticModel::power(1.5));
    models.push(SyntheticModel::power(3.0));
    // a variance profile tied to the slope breaks the postulate and must be
    // filtered out by the covariance test
    let coupled: Curve = std::sync::Arc::new(|c: f64| (0.5 + c) * 12.0 / 13.0);
    models.push(SyntheticModel::half_quadratic().with_noise_variance(coupled));
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for m in &models {
        let check = independence_covariance(m);
        if check.covariance.abs() < 1e-8 {
            checked += 1;
            worst = worst.max((check.weighted_slope_integral - 1.0).abs());
        }
    }
    outcome(
        checked == models.len() - 1 && worst < 1e-8,
        format!(
            "{checked} of {} models satisfy the postulate; max |integral - 1| = {worst:.2e}",
            models.len()
        ),
    )
}

fn reci_config(pair_seed: u64) -> InferenceConfig {
    InferenceConfig {
        scaling: ScalingKind::Standardize,
        seed: seed::derive(pair_seed, 1),
        ..InferenceConfig::new(ModelSpec::Log)
    }
}

fn generated_accuracy(kind: GenKind, alpha: f64, salt: u64) -> f64 {
    let mut correct = 0;
    for i in 0..PAIRS_PER_ALPHA {
        let pair_seed = seed::derive(seed::derive(CORPUS_SEED, salt), i);
        let cfg = GenConfig {
            kind,
            alpha,
            n_samples: SAMPLES_PER_PAIR,
            seed: pair_seed,
        };
        let (pair, _) = generate_pair(&cfg).expect("generate");
        let d = reci_decide(&pair, &reci_config(pair_seed)).expect("decide");
        if d.direction == Some(Direction::XtoY) {
            correct += 1;
        }
    }
    correct as f64 / PAIRS_PER_ALPHA as f64
}

fn linear_behavior() -> Option<Outcome> {
    let acc = generated_accuracy(GenKind::Linear, 0.5, 4);
    // 95% normal-approximation band for 100 fair coin flips
    let half = 1.96 * (0.25f64 / PAIRS_PER_ALPHA as f64).sqrt();
    outcome(
        (acc - 0.5).abs() <= half,
        format!("RECI log/standardize on 100 linear pairs, alpha 0.5: accuracy {acc:.2} (band [{:.3}, {:.3}])", 0.5 - half, 0.5 + half),
    )
}

fn invertible_behavior() -> Option<Outcome> {
    let alphas = [0.05, 0.25, 0.5, 0.9];
    let accs: Vec<f64> = alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| generated_accuracy(GenKind::Invertible, a, 50 + i as u64))
        .collect();
    let monotone = accs.windows(2).all(|w| w[1] <= w[0] + 0.10);
    let listed: Vec<String> = alphas
        .iter()
        .zip(&accs)
        .map(|(a, acc)| format!("{a}: {acc:.2}"))
        .collect();
    outcome(
        accs[0] >= 0.65 && monotone,
        format!(
            "RECI log/standardize accuracy by alpha {{{}}}",
            listed.join(", ")
        ),
    )
}

fn random_fixture(rng: &mut seed::Rng) -> CauseEffectPair {
    let n = rng.random_range(20..=60);
    let curvature: f64 = rng.random_range(-2.0..2.0);
    let noise: f64 = rng.random_range(0.0..0.3);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| v + curvature * v * v + noise * (rng.random::<f64>() - 0.5))
        .collect();
    CauseEffectPair::new("fixture", x, y).expect("fixture")
}

fn algorithm_equivalence() -> Option<Outcome> {
    let specs = [
        ModelSpec::Poly(1),
        ModelSpec::Poly(3),
        ModelSpec::Mon(2),
        ModelSpec::Mon(3),
        ModelSpec::Log,
        ModelSpec::Svr,
        ModelSpec::Nn(vec![2]),
    ];
    let mut rng = seed::rng(606);
    let mut mismatches = 0;
    for i in 0..1000u64 {
        let pair = random_fixture(&mut rng);
        let spec = specs[i as usize % specs.len()].clone();
        let cfg = InferenceConfig {
            seed: i,
            scaling: if i % 2 == 0 {
                ScalingKind::Normalize
            } else {
                ScalingKind::Standardize
            },
            ..InferenceConfig::new(spec.clone())
        };
        let plain = reci_decide(&pair, &cfg).expect("decide");
        let thresholded = reci_decide_threshold(
            &pair,
            &InferenceConfig {
                threshold: 0.0,
                ..cfg.clone()
            },
        )
        .expect("decide");
        // the unthresholded rule written out on the raw errors
        let x = scale(pair.x(), cfg.scaling).unwrap();
        let y = scale(pair.y(), cfg.scaling).unwrap();
        let (fwd, bwd) =
            run_errors(&x, &y, &spec, cfg.train_fraction, seed::derive(cfg.seed, 0)).unwrap();
        let expected = if fwd < bwd {
            Some(Direction::XtoY)
        } else if bwd < fwd {
            Some(Direction::YtoX)
        } else {
            None
        };
        if plain != thresholded || plain.direction != expected {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches on 1000 fixtures"),
    )
}

fn regression_oracle() -> Option<Outcome> {
    let mut rng = seed::rng(707);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = rng.random_range(12..=50);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (3.0 * v).sin() + 0.1 * rng.random::<f64>())
            .collect();
        let (spec, powers): (ModelSpec, Vec<i32>) = if i % 2 == 0 {
            let k = rng.random_range(1..=5u32);
            (ModelSpec::Poly(k), (0..=k as i32).collect())
        } else {
            let m = rng.random_range(2..=5u32);
            (ModelSpec::Mon(m), vec![m as i32, 0])
        };
        let design = DMatrix::from_fn(n, powers.len(), |r, c| x[r].powi(powers[c]));
        let pinv = design.pseudo_inverse(1e-14).expect("pseudo-inverse");
        let oracle = pinv * DVector::from_vec(y.clone());
        let fitted = fit(&spec, &x, &y, 0).expect("fit");
        let got = DVector::from_vec(fitted.parameters.clone());
        worst = worst.max((got - &oracle).norm() / oracle.norm());
    }
    outcome(
        worst <= 1e-8,
        format!("max relative parameter error {worst:.2e} over 100 instances"),
    )
}

fn decision_rate_machinery() -> Option<Outcome> {
    let method = parse_methods("reci:log").unwrap().remove(0);
    let records: Vec<PairRecord> = (0..100)
        .map(|i| PairRecord {
            pair_id: format!("p{i:03}"),
            method: method.clone(),
            // the 70 most confident records are the correct ones
            direction: Some(if i < 70 {
                Direction::XtoY
            } else {
                Direction::YtoX
            }),
            truth: Some(Direction::XtoY),
            weight: 1.0 + (i % 3) as f64,
            confidence: 1.0 - i as f64 / 100.0,
            score_xy: 0.0,
            score_yx: 0.0,
            wall_time_s: 0.0,
            error: None,
        })
        .collect();
    let rates: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
    let curve = decision_rate_curve(&records, &rates).unwrap();
    let full = accuracy(&records).unwrap();
    let non_increasing = curve
        .windows(2)
        .all(|w| w[1].accuracy <= w[0].accuracy + 1e-15);
    let last = curve.last().unwrap().accuracy;
    outcome(
        non_increasing && (last - full).abs() <= 1e-12,
        format!(
            "curve non-increasing: {non_increasing}; curve(1.0) {last:.12} vs accuracy {full:.12}"
        ),
    )
}

fn cep_headline() -> Option<Outcome> {
    let dir = std::env::var("RECI_CEP_DIR").ok()?;
    let meta = std::env::var("RECI_CEP_META").unwrap_or_else(|_| format!("{dir}/pairmeta.txt"));
    let data = match load_dataset(&dir, &meta) {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("could not load corpus: {e}")),
    };
    let cfg = BenchmarkConfig {
        runs: 100,
        ..BenchmarkConfig::default()
    };
    let report =
        run_benchmark(&data.pairs, &parse_methods("reci:mon2").unwrap(), &cfg).expect("benchmark");
    let acc = report.summaries[0].accuracy;
    outcome(
        (acc - 0.7213).abs() <= 0.05,
        format!(
            "{} pairs ({} skipped): weighted accuracy {acc:.4}, target 0.7213 +/- 0.05",
            data.pairs.len(),
            data.skipped.len()
        ),
    )
}

fn benchmark_determinism() -> Option<Outcome> {
    let corpus: Vec<CauseEffectPair> = (0..50u64)
        .map(|i| {
            let kind = if i % 2 == 0 {
                GenKind::Invertible
            } else {
                GenKind::NonInvertible(None)
            };
            let cfg = GenConfig {
                kind,
                alpha: 0.05 + 0.02 * (i % 10) as f64,
                n_samples: 300,
                seed: seed::derive(CORPUS_SEED, 1000 + i),
            };
            let (pair, _) = generate_pair(&cfg).expect("generate");
            pair.with_id(format!("pair{i:04}"))
        })
        .collect();
    let methods =
        parse_methods("reci:log,reci:poly3,reci:nn2,igci:u-slope,igci:g-entropy").unwrap();
    let run = |workers: usize| {
        let cfg = BenchmarkConfig {
            runs: 3,
            master_seed: 42,
            workers,
            ..BenchmarkConfig::default()
        };
        run_benchmark(&corpus, &methods, &cfg)
            .expect("benchmark")
            .without_timings()
    };
    let first = run(1);
    let mut second = run(4);
    second.config.workers = first.config.workers;
    let a = first.to_json().unwrap();
    let b = second.to_json().unwrap();
    outcome(
        a == b,
        format!("{} bytes of JSON, identical: {}", a.len(), a == b),
    )
}

/// Id, name, whether a failure fails the run, and the check itself.
type Criterion = (u32, &'static str, bool, fn() -> Option<Outcome>);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            1,
            "small-noise limit: quadrature vs Monte Carlo",
            true,
            lemma_limit_agreement,
        ),
        (
            2,
            "error asymmetry over random monotone links",
            true,
            theorem_property_suite,
        ),
        (
            3,
            "slope-variance identity under the postulate",
            true,
            slope_identity,
        ),
        (
            4,
            "linear links are not identifiable",
            true,
            linear_behavior,
        ),
        (
            5,
            "invertible links at small noise",
            true,
            invertible_behavior,
        ),
        (
            6,
            "thresholded and plain decisions agree at t = 0",
            true,
            algorithm_equivalence,
        ),
        (
            7,
            "Poly/Mon fits match pseudo-inverse",
            true,
            regression_oracle,
        ),
        (8, "decision-rate curve", true, decision_rate_machinery),
        (
            9,
            "real-world corpus headline accuracy",
            false,
            cep_headline,
        ),
        (
            10,
            "benchmark report determinism",
            true,
            benchmark_determinism,
        ),
    ];
    let mut failed = 0;
    for (id, name, blocking, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            None => println!(
                "criterion {id:>2} SKIP  {name}: set RECI_CEP_DIR (and optionally RECI_CEP_META) to run"
            ),
            Some(o) => {
                let label = if o.pass { "PASS" } else { "FAIL" };
                let note = if blocking { "" } else { " [non-blocking]" };
                println!("criterion {id:>2} {label}  {name}: {} ({secs:.1} s){note}", o.detail);
                if !o.pass && blocking {
                    failed += 1;
                }
            }
        }
    }
    if failed > 0 {
        println!("{failed} blocking criteria failed");
        std::process::exit(1);
    }
}
