//! Smooth calibration error and its logit-space dual.

use super::chain::{self, Node};
use super::prediction::{merge_ties, PredictionSet, Space};
use crate::error::{Error, Result};

/// Optimal witness of a Lipschitz-constrained metric solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzWitness {
    /// Distinct prediction values, strictly increasing.
    pub values: Vec<f64>,
    /// `Σ_{i: value_i = v_j} (y_i − p_i) / n`.
    pub weights: Vec<f64>,
    /// Witness value `h_j` at each distinct prediction.
    pub witness: Vec<f64>,
    pub objective: f64,
    pub lipschitz: f64,
    pub bound: f64,
}

impl LipschitzWitness {
    /// Checks the box and consecutive Lipschitz constraints with slack `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.witness.iter().all(|h| h.abs() <= self.bound + tol)
            && self
                .witness
                .windows(2)
                .zip(self.values.windows(2))
                .all(|(h, v)| (h[1] - h[0]).abs() <= self.lipschitz * (v[1] - v[0]) + tol)
    }
}

/// Maximizes `Σ_j w_j h_j` over `L`-Lipschitz `h` bounded by `B`, on the tie-merged
/// prediction values of `preds` (in the set's own space).
pub(crate) fn lipschitz_witness(
    preds: &PredictionSet,
    lipschitz: f64,
    bound: f64,
) -> LipschitzWitness {
    let merged = merge_ties(preds);
    let n = preds.len() as f64;
    let weights: Vec<f64> = merged.residual_sums.iter().map(|r| r / n).collect();
    let nodes: Vec<Node> = weights
        .iter()
        .map(|&w| Node { quad: 0.0, lin: w })
        .collect();
    let gaps: Vec<f64> = merged
        .values
        .windows(2)
        .map(|v| lipschitz * (v[1] - v[0]))
        .collect();
    let (witness, objective) = chain::maximize(&nodes, &gaps, bound);
    LipschitzWitness {
        values: merged.values,
        weights,
        witness,
        objective: objective.max(0.0),
        lipschitz,
        bound,
    }
}

/// Empirical smooth calibration error: the largest correlation between a
/// 1-Lipschitz `h: [0, 1] → [−1, 1]` of the prediction and the residual `y − p`.
pub fn smooth_ce(preds: &PredictionSet) -> Result<(f64, LipschitzWitness)> {
    if preds.space() != Space::Probability {
        return Err(Error::input(
            "smooth_ce expects probability-space predictions",
        ));
    }
    let w = lipschitz_witness(preds, 1.0, 1.0);
    Ok((w.objective, w))
}

/// Dual smooth calibration error over `(1/4)`-Lipschitz witnesses of the logit.
pub fn dual_smooth_ce(preds: &PredictionSet) -> Result<(f64, LipschitzWitness)> {
    if preds.space() != Space::Logit {
        return Err(Error::input(
            "dual_smooth_ce expects logit-space predictions",
        ));
    }
    let w = lipschitz_witness(preds, 0.25, 1.0);
    Ok((w.objective, w))
}
