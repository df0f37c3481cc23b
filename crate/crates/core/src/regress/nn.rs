//! Small fully connected regressor: tanh hidden layers, linear output,
//! full-batch Adam on the mean squared error.
//!
//! Parameters are flattened layer by layer as `W` (row-major, `out x in`)
//! followed by the bias vector. A step that would raise the training loss
//! is rejected and the learning rate halved, so the loss trace never
//! increases.

use rand::Rng as _;

use crate::seed;

pub(crate) const EPOCHS: usize = 2000;
const LEARNING_RATE: f64 = 0.01;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Layer widths including the scalar input and output.
pub(crate) fn widths(hidden: &[usize]) -> Vec<usize> {
    let mut w = Vec::with_capacity(hidden.len() + 2);
    w.push(1);
    w.extend_from_slice(hidden);
    w.push(1);
    w
}

pub(crate) fn param_count(hidden: &[usize]) -> usize {
    widths(hidden).windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

pub(crate) fn predict(hidden: &[usize], params: &[f64], x: f64) -> f64 {
    let widths = widths(hidden);
    let mut act = vec![x];
    let mut off = 0;
    let layers = widths.len() - 1;
    for (l, w) in widths.windows(2).enumerate() {
        let (nin, nout) = (w[0], w[1]);
        let weights = &params[off..off + nin * nout];
        let bias = &params[off + nin * nout..off + nin * nout + nout];
        off += nout * (nin + 1);
        let mut next = Vec::with_capacity(nout);
        for o in 0..nout {
            let z: f64 = bias[o]
                + weights[o * nin..(o + 1) * nin]
                    .iter()
                    .zip(&act)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            next.push(if l + 1 < layers { z.tanh() } else { z });
        }
        act = next;
    }
    act[0]
}

/// Mean squared error and its gradient with respect to every parameter.
fn loss_and_grad(widths: &[usize], params: &[f64], x: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let layers = widths.len() - 1;
    let mut grad = vec![0.0; params.len()];
    let mut offsets = Vec::with_capacity(layers);
    let mut off = 0;
    for w in widths.windows(2) {
        offsets.push(off);
        off += w[1] * (w[0] + 1);
    }
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut acts: Vec<Vec<f64>> = vec![Vec::new(); layers + 1];

    for (&xi, &yi) in x.iter().zip(y) {
        acts[0].clear();
        acts[0].push(xi);
        for l in 0..layers {
            let (nin, nout) = (widths[l], widths[l + 1]);
            let wts = &params[offsets[l]..offsets[l] + nin * nout];
            let bias = &params[offsets[l] + nin * nout..offsets[l] + nout * (nin + 1)];
            let mut next = Vec::with_capacity(nout);
            for o in 0..nout {
                let z: f64 = bias[o]
                    + wts[o * nin..(o + 1) * nin]
                        .iter()
                        .zip(&acts[l])
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                next.push(if l + 1 < layers { z.tanh() } else { z });
            }
            acts[l + 1] = next;
        }
        let r = acts[layers][0] - yi;
        loss += r * r;

        // delta holds dLoss/dz for the current layer
        let mut delta = vec![2.0 * r / n];
        for l in (0..layers).rev() {
            let (nin, nout) = (widths[l], widths[l + 1]);
            let base = offsets[l];
            for o in 0..nout {
                for i in 0..nin {
                    grad[base + o * nin + i] += delta[o] * acts[l][i];
                }
                grad[base + nin * nout + o] += delta[o];
            }
            if l > 0 {
                let wts = &params[base..base + nin * nout];
                let mut prev = vec![0.0; nin];
                for (i, p) in prev.iter_mut().enumerate() {
                    let s: f64 = (0..nout).map(|o| wts[o * nin + i] * delta[o]).sum();
                    let a = acts[l][i];
                    *p = s * (1.0 - a * a);
                }
                delta = prev;
            }
        }
    }
    (loss / n, grad)
}

pub(crate) struct NnFit {
    pub params: Vec<f64>,
    pub converged: bool,
    pub trace: Vec<f64>,
}

pub(crate) fn fit(hidden: &[usize], x: &[f64], y: &[f64], seed_value: u64) -> NnFit {
    let widths = widths(hidden);
    let mut rng = seed::rng(seed_value);
    let mut params = Vec::with_capacity(param_count(hidden));
    for w in widths.windows(2) {
        let bound = 1.0 / (w[0] as f64).sqrt();
        for _ in 0..w[1] * (w[0] + 1) {
            params.push(rng.random_range(-bound..=bound));
        }
    }

    let (mut loss, mut grad) = loss_and_grad(&widths, &params, x, y);
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut lr = LEARNING_RATE;
    let mut trace = Vec::with_capacity(EPOCHS + 1);
    trace.push(loss);
    let mut t = 0i32;

    for _ in 0..EPOCHS {
        t += 1;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        let mut cand = params.clone();
        for k in 0..params.len() {
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * grad[k];
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * grad[k] * grad[k];
            cand[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + EPS);
        }
        let (cand_loss, cand_grad) = loss_and_grad(&widths, &cand, x, y);
        if cand_loss.is_finite() && cand_loss <= loss {
            params = cand;
            loss = cand_loss;
            grad = cand_grad;
            lr = (lr * 1.1).min(LEARNING_RATE);
        } else {
            lr *= 0.5;
        }
        trace.push(loss);
        if lr < 1e-12 {
            break;
        }
    }
    let gmax = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
    NnFit {
        params,
        converged: gmax < 1e-4 || lr < 1e-12,
        trace,
    }
}
