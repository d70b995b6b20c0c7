//! Post-processing gaps: how much a Lipschitz correction of the prediction can
//! reduce the squared loss (probability space) or the logistic loss (logit space).

use super::chain::{self, Node};
use super::prediction::{merge_ties, sigmoid, softplus, PredictionSet, Space};
use crate::error::{Error, Result};

/// `L̂(f) − min_h (1/n) Σ (y_i − p_i − h(p_i))²` over 1-Lipschitz `h: [0,1] → [−1,1]`.
///
/// Expanding the square per tie group, the reduction is the concave quadratic
/// `Σ_j (2 R_j h_j − c_j h_j²) / n`, maximized exactly by the chain DP.
pub fn pgap_sq(preds: &PredictionSet) -> Result<f64> {
    if preds.space() != Space::Probability {
        return Err(Error::input(
            "pgap_sq expects probability-space predictions",
        ));
    }
    let merged = merge_ties(preds);
    let n = preds.len() as f64;
    let nodes: Vec<Node> = merged
        .counts
        .iter()
        .zip(&merged.residual_sums)
        .map(|(&c, &r)| Node {
            quad: -c / n,
            lin: 2.0 * r / n,
        })
        .collect();
    let gaps: Vec<f64> = merged.values.windows(2).map(|v| v[1] - v[0]).collect();
    let (_, gain) = chain::maximize(&nodes, &gaps, 1.0);
    Ok(gain.max(0.0))
}

/// Logistic-loss post-processing gap over 1-Lipschitz corrections of the
/// logit bounded in `[−4, 4]`.
pub fn pgap_logistic(preds: &PredictionSet) -> Result<f64> {
    if preds.space() != Space::Logit {
        return Err(Error::input(
            "pgap_logistic expects logit-space predictions",
        ));
    }
    let merged = merge_ties(preds);
    let problem = LogisticChain {
        values: merged.values,
        counts: merged.counts,
        label_sums: merged.label_sums,
        n: preds.len() as f64,
    };
    let h = problem.solve(1.0, 4.0);
    let zero = vec![0.0; h.len()];
    Ok((problem.risk(&zero) - problem.risk(&h)).max(0.0))
}

/// Merged logistic risk `(1/n) Σ_j c_j ψ(v_j + h_j) − Y_j (v_j + h_j)`.
pub(crate) struct LogisticChain {
    pub values: Vec<f64>,
    pub counts: Vec<f64>,
    pub label_sums: Vec<f64>,
    pub n: f64,
}

impl LogisticChain {
    pub fn risk(&self, h: &[f64]) -> f64 {
        (0..h.len())
            .map(|j| {
                let s = self.values[j] + h[j];
                self.counts[j] * softplus(s) - self.label_sums[j] * s
            })
            .sum::<f64>()
            / self.n
    }

    /// Proximal Newton: each step minimizes the separable second-order model
    /// exactly over the chain polytope, followed by a backtracking line search.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, lipschitz: f64, bound: f64) -> Vec<f64> {
        let m = self.values.len();
        let gaps: Vec<f64> = self
            .values
            .windows(2)
            .map(|v| lipschitz * (v[1] - v[0]))
            .collect();
        let mut h = vec![0.0; m];
        let mut f = self.risk(&h);
        for _ in 0..200 {
            let mut nodes = Vec::with_capacity(m);
            let mut grad = Vec::with_capacity(m);
            for j in 0..m {
                let p = sigmoid(self.values[j] + h[j]);
                let g = (self.counts[j] * p - self.label_sums[j]) / self.n;
                let curv =
                    (self.counts[j] * p * (1.0 - p) / self.n).max(1e-12 * self.counts[j] / self.n);
                grad.push(g);
                // maximize −½ H (x − h)² − g (x − h)
                nodes.push(Node {
                    quad: -0.5 * curv,
                    lin: curv * h[j] - g,
                });
            }
            let (target, _) = chain::maximize(&nodes, &gaps, bound);
            let dir: Vec<f64> = target.iter().zip(&h).map(|(t, x)| t - x).collect();
            let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            if slope > -1e-16 {
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-10 {
                let trial: Vec<f64> = h.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
                let ft = self.risk(&trial);
                if ft <= f + 1e-4 * t * slope {
                    let improvement = f - ft;
                    h = trial;
                    f = ft;
                    accepted = improvement > 1e-15;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        h
    }
}
