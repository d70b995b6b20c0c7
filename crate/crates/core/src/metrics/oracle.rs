//! Brute-force verification oracle: dynamic programming over a discretized witness.

use std::collections::VecDeque;

use super::prediction::{merge_ties, PredictionSet};
use crate::error::{Error, Result};

/// Best objective `Σ_j w_j h_j` with each `h_j` restricted to the grid
/// `{−B, −B + step, …, B}` under the chain constraints. Tie-merged weights are
/// computed exactly as in [`smooth_ce`](super::smooth_ce), in the set's own space.
///
/// The result never exceeds the continuous optimum and trails it by at most
/// about `step · Σ|w_j|`. Intended for small sets (n ≲ 15).
pub fn witness_oracle(preds: &PredictionSet, lipschitz: f64, bound: f64, step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::input(format!(
            "oracle step must be positive, got {step}"
        )));
    }
    if !(lipschitz >= 0.0 && bound > 0.0) {
        return Err(Error::input("oracle needs L ≥ 0 and B > 0"));
    }
    let merged = merge_ties(preds);
    let n = preds.len() as f64;
    let w: Vec<f64> = merged.residual_sums.iter().map(|r| r / n).collect();
    Ok(grid_chain_max(
        &merged.values,
        lipschitz,
        bound,
        step,
        |j, h| w[j] * h,
    ))
}

/// Grid DP for an arbitrary per-node objective `term(j, h)` on sorted `values`.
pub(crate) fn grid_chain_max<F>(
    values: &[f64],
    lipschitz: f64,
    bound: f64,
    step: f64,
    term: F,
) -> f64
where
    F: Fn(usize, f64) -> f64,
{
    let half = (bound / step + 1e-9).floor() as i64;
    let grid: Vec<f64> = (-half..=half).map(|i| i as f64 * step).collect();
    let mut best: Vec<f64> = grid.iter().map(|&h| term(0, h)).collect();
    for j in 1..values.len() {
        let reach = (lipschitz * (values[j] - values[j - 1]) / step + 1e-9).floor() as usize;
        let window = sliding_max(&best, reach);
        for (i, b) in best.iter_mut().enumerate() {
            *b = window[i] + term(j, grid[i]);
        }
    }
    best.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// `out[i] = max(v[i − r ..= i + r])`, clipped to the array.
#[allow(clippy::needless_range_loop)]
fn sliding_max(v: &[f64], r: usize) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + r).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&b| v[b] <= v[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f + r < i) {
            dq.pop_front();
        }
        out[i] = v[*dq.front().expect("window is never empty")];
    }
    out
}
