use super::prediction::{merge_ties, PredictionSet, Space};
use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::kernels::{median_heuristic, KernelFamily, KernelSpec};
use crate::points::Points;

/// Plug-in kernel calibration error
/// `√( (1/n²) Σ_i Σ_j (y_i − p_i)(y_j − p_j) k(p_i, p_j) )`.
///
/// Without an explicit bandwidth the median heuristic on the prediction values
/// is used (σ = 1 for a single sample). Tiny negative radicands are clamped to 0.
pub fn mmce(preds: &PredictionSet, family: KernelFamily, bandwidth: Option<f64>) -> Result<f64> {
    mmce_with(preds, family, bandwidth, Mode::default())
}

pub fn mmce_with(
    preds: &PredictionSet,
    family: KernelFamily,
    bandwidth: Option<f64>,
    mode: Mode,
) -> Result<f64> {
    if preds.space() != Space::Probability {
        return Err(Error::input("mmce expects probability-space predictions"));
    }
    let sigma = match bandwidth {
        Some(s) => s,
        None if preds.len() >= 2 => median_heuristic(&Points::from_scalars(preds.values())?)?.sigma,
        None => 1.0,
    };
    let spec = KernelSpec::new(family, sigma)?;
    let merged = merge_ties(preds);
    let v = &merged.values;
    let r = &merged.residual_sums;
    if r.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let m = v.len();
    let total = exec::sum_range(mode, m, |i| {
        let mut row = 0.0;
        for j in 0..m {
            let d = v[i] - v[j];
            row += r[j] * spec.from_sq_dist(d * d);
        }
        r[i] * row
    });
    let n = preds.len() as f64;
    Ok((total / (n * n)).max(0.0).sqrt())
}
