use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use reci_core::bench::{
    decision_rate_curve, parse_methods, run_benchmark, svg_line_plot, BenchmarkConfig,
    BenchmarkReport, Series,
};
use reci_core::data::{load_dataset, load_pair, write_pair};
use reci_core::infer::{reci_aggregate, Aggregation, InferenceConfig};
use reci_core::preprocess::ScalingKind;
use reci_core::regress::ModelSpec;
use reci_core::synth::{generate_pair, GenConfig, GenKind};
use reci_core::theory::{
    sigmoid_family, verify_theorem, CondVarEstimator, SyntheticModel, TheoremCheckConfig,
};
use reci_core::{seed, Error};

#[derive(Parser)]
#[command(
    name = "reci",
    version,
    about = "Causal direction inference from regression errors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    AveragedMse,
    PerRun,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::AveragedMse => Aggregation::AveragedMse,
            AggregationArg::PerRun => Aggregation::PerRun,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the direction of a single pair file.
    Infer {
        pairfile: PathBuf,
        #[arg(long, default_value = "log")]
        model: ModelSpec,
        #[arg(long, default_value = "normalize")]
        scaling: ScalingKind,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, value_enum, default_value = "averaged-mse")]
        aggregation: AggregationArg,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run methods over a labelled corpus and write a report.
    Benchmark {
        #[arg(long)]
        corpus: PathBuf,
        /// Ground-truth file; defaults to meta.txt or pairmeta.txt in the
        /// corpus directory.
        #[arg(long)]
        meta: Option<PathBuf>,
        #[arg(long, default_value = "reci:log")]
        methods: String,
        /// `none` or `kde<threshold>`, e.g. `kde0.1`.
        #[arg(long, default_value = "none")]
        preprocess: String,
        /// Maximum rows per pair, or `none`.
        #[arg(long, default_value = "500")]
        subsample: String,
        #[arg(long, default_value = "normalize")]
        scaling: ScalingKind,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, value_enum, default_value = "averaged-mse")]
        aggregation: AggregationArg,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value = "0.1:0.1:1.0")]
        rates: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-pair records as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also plot the decision-rate curves as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Write synthetic labelled corpora, one directory per alpha.
    Generate {
        #[arg(long)]
        kind: GenKind,
        /// Comma list or `start:step:end`.
        #[arg(long)]
        alpha_grid: String,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decision-rate curves from a saved benchmark report.
    Curve {
        #[arg(long)]
        report: PathBuf,
        /// Comma list or `start:step:end`.
        #[arg(long, default_value = "0.1:0.1:1.0")]
        rates: String,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Monte Carlo check of the error asymmetry on random monotone links.
    VerifyTheory {
        /// Number of random sigmoid links; a linear link is always added.
        #[arg(long, default_value_t = 20)]
        models: usize,
        #[arg(long, default_value = "0.01,0.05,0.1")]
        alphas: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value = "binning")]
        estimator: CondVarEstimator,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn usage(msg: String) -> Error {
    Error::InvalidConfig(msg)
}

/// Parses `a,b,c` or `start:step:end` (inclusive of `end`).
fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("invalid number `{v}`")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, step, end] => {
            let (start, step, end) = (num(start)?, num(step)?, num(end)?);
            if step.is_nan() || step <= 0.0 || end < start {
                return Err(usage(format!("invalid range `{s}`")));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize;
            // round away the drift of repeated decimal steps
            Ok((0..=count)
                .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
                .collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(usage(format!("invalid grid `{s}`"))),
    }
}

fn parse_preprocess(s: &str) -> Result<Option<f64>, Error> {
    if s == "none" {
        return Ok(None);
    }
    s.strip_prefix("kde")
        .and_then(|t| t.parse().ok())
        .map(Some)
        .ok_or_else(|| usage(format!("unknown preprocessing `{s}`")))
}

fn parse_subsample(s: &str) -> Result<Option<usize>, Error> {
    if s == "none" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| usage(format!("invalid subsample size `{s}`")))
}

fn write_output(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn curve_series(report: &BenchmarkReport, rates: &[f64]) -> anyhow::Result<Vec<Series>> {
    report
        .methods
        .iter()
        .map(|method| {
            let own: Vec<_> = report
                .records
                .iter()
                .filter(|r| &r.method == method)
                .cloned()
                .collect();
            let curve = decision_rate_curve(&own, rates)?;
            Ok(Series {
                label: method.to_string(),
                points: curve.iter().map(|p| (p.rate, p.accuracy)).collect(),
            })
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Infer {
            pairfile,
            model,
            scaling,
            runs,
            aggregation,
            threshold,
            train_fraction,
            seed,
        } => {
            let pair = load_pair(&pairfile)?;
            let cfg = InferenceConfig {
                scaling,
                runs,
                aggregation: aggregation.into(),
                threshold,
                train_fraction,
                seed,
                ..InferenceConfig::new(model.clone())
            };
            let d = reci_aggregate(&pair, &cfg)?;
            let out = serde_json::json!({
                "pair": pair.id,
                "model": model.to_string(),
                "direction": d.direction,
                "mse_y_given_x": d.mse_y_given_x,
                "mse_x_given_y": d.mse_x_given_y,
                "confidence": d.confidence,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Benchmark {
            corpus,
            meta,
            methods,
            preprocess,
            subsample,
            scaling,
            runs,
            aggregation,
            threshold,
            train_fraction,
            seed,
            workers,
            rates,
            out,
            csv,
            svg,
        } => {
            let methods = parse_methods(&methods)?;
            let cfg = BenchmarkConfig {
                preprocess: parse_preprocess(&preprocess)?,
                subsample: parse_subsample(&subsample)?,
                scaling,
                train_fraction,
                runs,
                aggregation: aggregation.into(),
                threshold,
                master_seed: seed,
                workers,
                rates: parse_grid(&rates)?,
            };
            let meta = match meta {
                Some(m) => m,
                None => ["meta.txt", "pairmeta.txt"]
                    .iter()
                    .map(|name| corpus.join(name))
                    .find(|p| p.is_file())
                    .ok_or_else(|| {
                        Error::MetaMismatch(format!("no meta file in {}", corpus.display()))
                    })?,
            };
            let data = load_dataset(&corpus, &meta)?;
            for s in &data.skipped {
                eprintln!("skipped {}: {}", s.id, s.reason);
            }
            let report = run_benchmark(&data.pairs, &methods, &cfg)?;
            write_output(&out, &report.to_json()?)?;
            if let Some(path) = csv {
                write_output(&path, &report.records_csv()?)?;
            }
            if let Some(path) = svg {
                let series = curve_series(&report, &cfg.rates)?;
                write_output(&path, &svg_line_plot(&series, "decision rate", "accuracy"))?;
            }
            println!(
                "{:<20} {:>9} {:>8} {:>7} {:>14}",
                "method", "accuracy", "decided", "failed", "time/pair [s]"
            );
            for s in &report.summaries {
                println!(
                    "{:<20} {:>9.4} {:>8} {:>7} {:>7.4}±{:.4}",
                    s.method.to_string(),
                    s.accuracy,
                    s.decided,
                    s.failed,
                    s.mean_time_s,
                    s.std_time_s
                );
            }
        }
        Command::Generate {
            kind,
            alpha_grid,
            pairs,
            samples,
            seed: master,
            out,
        } => {
            let alphas = parse_grid(&alpha_grid)?;
            for (a_idx, &alpha) in alphas.iter().enumerate() {
                let dir = out.join(format!("alpha-{alpha:.3}"));
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let mut meta = String::new();
                let mut models = Vec::with_capacity(pairs);
                for i in 0..pairs {
                    let cfg = GenConfig {
                        kind,
                        alpha,
                        n_samples: samples,
                        seed: seed::derive(seed::derive(master, a_idx as u64), i as u64),
                    };
                    let (pair, model) = generate_pair(&cfg)?;
                    let id = format!("{:04}", i + 1);
                    write_pair(dir.join(format!("pair{id}.txt")), &pair)?;
                    meta.push_str(&format!("{id} 1 1 2 2 1\n"));
                    models.push(serde_json::json!({ "id": id, "model": model }));
                }
                write_output(&dir.join("meta.txt"), &meta)?;
                write_output(
                    &dir.join("manifest.json"),
                    &serde_json::to_string_pretty(&models)?,
                )?;
                println!("{}: {pairs} pairs", dir.display());
            }
        }
        Command::Curve { report, rates, svg } => {
            let text = fs::read_to_string(&report).map_err(|e| Error::Io {
                path: report.clone(),
                source: e,
            })?;
            let report = BenchmarkReport::from_json(&text)?;
            let rates = parse_grid(&rates)?;
            let series = curve_series(&report, &rates)?;
            for s in &series {
                let cells: Vec<String> = s
                    .points
                    .iter()
                    .map(|(r, a)| format!("{r:.2}:{a:.4}"))
                    .collect();
                println!("{:<20} {}", s.label, cells.join(" "));
            }
            if let Some(path) = svg {
                write_output(&path, &svg_line_plot(&series, "decision rate", "accuracy"))?;
            }
        }
        Command::VerifyTheory {
            models,
            alphas,
            seed,
            samples,
            estimator,
            format,
            out,
        } => {
            let mut family = sigmoid_family(models, seed);
            family.push(SyntheticModel::linear());
            let cfg = TheoremCheckConfig {
                n_samples: samples,
                estimator,
                seed,
                ..TheoremCheckConfig::default()
            };
            let report = verify_theorem(&family, &parse_grid(&alphas)?, &cfg)?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&report)?,
                Format::Csv => report.to_csv()?,
            };
            match out {
                Some(path) => write_output(&path, &text)?,
                None => println!("{text}"),
            }
            eprintln!(
                "violations: {}, nonlinear share above 1 + tol: {:.2}",
                report.violations.len(),
                report.nonlinear_above
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(err) if err.is_numerical() => ExitCode::from(3),
                Some(Error::InvalidConfig(_) | Error::InvalidSpec(_)) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
