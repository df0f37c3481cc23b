//! Linear support vector regression: epsilon-insensitive loss with an L2
//! penalty on the slope, minimized by subgradient descent with `1/t` steps.
//! The objective is `0.5 * REG * w^2 + sum_i max(0, |r_i| - eps)`, scaled
//! by `1/n` for the descent; the best iterate is returned.

use crate::preprocess::{mean, variance, VarianceConvention};

pub(crate) const ITERATIONS: usize = 5000;
const REG: f64 = 1.0;
const EPS_FRACTION: f64 = 0.1;
const STEP0: f64 = 1.0;

fn objective(w: f64, b: f64, x: &[f64], y: &[f64], eps: f64) -> f64 {
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| ((yi - w * xi - b).abs() - eps).max(0.0))
        .sum();
    (0.5 * REG * w * w + loss) / x.len() as f64
}

pub(crate) struct SvrFit {
    pub params: Vec<f64>,
    pub trace: Vec<f64>,
}

pub(crate) fn fit(x: &[f64], y: &[f64]) -> SvrFit {
    let n = x.len() as f64;
    let eps = EPS_FRACTION * variance(y, VarianceConvention::Sample).sqrt();
    let (mut w, mut b) = (0.0, mean(y));
    let mut best = (w, b, objective(w, b, x, y, eps));
    let mut trace = Vec::with_capacity(ITERATIONS + 1);
    trace.push(best.2);

    for t in 1..=ITERATIONS {
        let mut gw = REG * w;
        let mut gb = 0.0;
        for (&xi, &yi) in x.iter().zip(y) {
            let r = yi - w * xi - b;
            if r > eps {
                gw -= xi;
                gb -= 1.0;
            } else if r < -eps {
                gw += xi;
                gb += 1.0;
            }
        }
        let step = STEP0 / t as f64;
        w -= step * gw / n;
        b -= step * gb / n;
        let obj = objective(w, b, x, y, eps);
        if obj < best.2 {
            best = (w, b, obj);
        }
        trace.push(best.2);
    }
    SvrFit {
        params: vec![best.1, best.0],
        trace,
    }
}
