//! Four-parameter logistic curve `a + (b - a) / (1 + exp(c (d - x)))`
//! fitted by Levenberg-Marquardt with seeded multi-starts.

use rand::Rng as _;

use super::linalg::solve_dense;
use crate::seed;

const STARTS: usize = 5;
const MAX_ITER: usize = 200;
const SLOPE_CHOICES: [f64; 4] = [1.0, -1.0, 5.0, -5.0];

#[inline]
pub(crate) fn eval(p: &[f64], x: f64) -> f64 {
    let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
    let z = (c * (d - x)).clamp(-700.0, 700.0);
    a + (b - a) / (1.0 + z.exp())
}

fn sse(p: &[f64], x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - eval(p, xi);
            r * r
        })
        .sum()
}

pub(crate) struct LogisticFit {
    pub params: Vec<f64>,
    pub converged: bool,
    /// Mean squared training loss after each iteration of the winning start.
    pub trace: Vec<f64>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// One Levenberg-Marquardt descent. Only steps that reduce the squared
/// error are accepted, so the loss sequence is non-increasing.
fn descend(start: [f64; 4], x: &[f64], y: &[f64]) -> (Vec<f64>, f64, bool, Vec<f64>) {
    let n = x.len() as f64;
    let mut p = start.to_vec();
    let mut cost = sse(&p, x, y);
    let mut lambda = 1e-3;
    let mut trace = vec![cost / n];
    let mut converged = false;

    for _ in 0..MAX_ITER {
        // J^T J and J^T r
        let mut jtj = [0.0; 16];
        let mut jtr = [0.0; 4];
        for (&xi, &yi) in x.iter().zip(y) {
            let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
            let z = (c * (d - xi)).clamp(-700.0, 700.0);
            let e = z.exp();
            let s = 1.0 / (1.0 + e);
            // ds/dz = -s (1 - s)
            let ds = -s * (1.0 - s);
            let grad = [1.0 - s, s, (b - a) * ds * (d - xi), (b - a) * ds * c];
            let r = yi - (a + (b - a) * s);
            for i in 0..4 {
                jtr[i] += grad[i] * r;
                for j in 0..4 {
                    jtj[i * 4 + j] += grad[i] * grad[j];
                }
            }
        }
        let gnorm = jtr.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if gnorm < 1e-12 * (1.0 + cost) {
            converged = true;
            break;
        }

        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj.to_vec();
            for i in 0..4 {
                m[i * 4 + i] += lambda * jtj[i * 4 + i].max(1e-12);
            }
            if let Some(step) = solve_dense(m, jtr.to_vec()) {
                let cand: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
                let cand_cost = sse(&cand, x, y);
                if cand_cost.is_finite() && cand_cost < cost {
                    let rel = (cost - cand_cost) / cost.max(1e-300);
                    p = cand;
                    cost = cand_cost;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    if rel < 1e-12 {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        trace.push(cost / n);
        if !improved {
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    (p, cost, converged, trace)
}

pub(crate) fn fit(x: &[f64], y: &[f64], seed_value: u64) -> LogisticFit {
    let mut rng = seed::rng(seed_value);
    let (ylo, yhi) = crate::preprocess::min_max(y);
    let (xlo, xhi) = crate::preprocess::min_max(x);
    let xmed = median(x);
    let xrange = (xhi - xlo).max(f64::MIN_POSITIVE);

    let mut best: Option<(Vec<f64>, f64, bool, Vec<f64>)> = None;
    for start in 0..STARTS {
        let c = SLOPE_CHOICES[rng.random_range(0..SLOPE_CHOICES.len())];
        let d = if start == 0 {
            xmed
        } else {
            xmed + rng.random_range(-0.25..0.25) * xrange
        };
        let run = descend([ylo, yhi, c, d], x, y);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (params, _, converged, trace) = best.expect("at least one start");
    LogisticFit {
        params,
        converged,
        trace,
    }
}
