use super::prediction::{PredictionSet, Space};
use crate::error::{Error, Result};

/// Default bin count `⌊n^{1/3}⌋`, at least one.
pub fn default_bins(n: usize) -> usize {
    let mut b = (n as f64).cbrt().floor() as usize;
    // guard against cbrt rounding just below an exact cube
    while (b + 1).pow(3) <= n {
        b += 1;
    }
    while b > 1 && b.pow(3) > n {
        b -= 1;
    }
    b.max(1)
}

/// Equal-width binned ECE `Σ_b |Σ_{i∈b} (y_i − p_i)| / n`. The last bin is
/// closed on the right so `p = 1` lands in it. Returns the value and bin count.
pub fn binned_ece(preds: &PredictionSet, bins: Option<usize>) -> Result<(f64, usize)> {
    if preds.space() != Space::Probability {
        return Err(Error::input(
            "binned_ece expects probability-space predictions",
        ));
    }
    let b = match bins {
        Some(0) => return Err(Error::input("bin count must be positive")),
        Some(b) => b,
        None => default_bins(preds.len()),
    };
    let mut sums = vec![0.0; b];
    for (i, &p) in preds.values().iter().enumerate() {
        let k = ((p * b as f64).floor() as usize).min(b - 1);
        sums[k] += preds.residual(i);
    }
    let total: f64 = sums.iter().map(|s| s.abs()).sum();
    Ok((total / preds.len() as f64, b))
}
