//! Exact empirical calibration metrics.
//!
//! The Lipschitz-witness metrics (smooth CE, its dual, and the squared
//! post-processing gap) are solved exactly on the tie-merged, sorted
//! prediction values, where consecutive Lipschitz constraints imply all
//! pairwise ones. [`witness_oracle`] is an independent grid DP used to check
//! them.

mod binned;
mod chain;
mod mmce;
mod oracle;
mod pgap;
mod prediction;
mod smooth;

pub use binned::{binned_ece, default_bins};
pub use mmce::{mmce, mmce_with};
pub use oracle::witness_oracle;
pub use pgap::{pgap_logistic, pgap_sq};
pub use prediction::{sigmoid, softplus, PredictionSet, Space};
pub use smooth::{dual_smooth_ce, smooth_ce, LipschitzWitness};

use crate::error::{Error, Result};
use crate::format::{fmt_f64, fmt_opt, parse_f64, parse_opt};
use crate::kernels::KernelFamily;

/// Knobs for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub bins: Option<usize>,
    pub mmce_family: KernelFamily,
    pub mmce_bandwidth: Option<f64>,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            bins: None,
            mmce_family: KernelFamily::Laplace,
            mmce_bandwidth: None,
        }
    }
}

/// All metrics for one prediction set. Dual quantities exist only for logit inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub n: usize,
    pub accuracy: f64,
    pub smce: f64,
    pub dual_smce: Option<f64>,
    pub pgap_sq: f64,
    pub pgap_logistic: Option<f64>,
    pub binned_ece: f64,
    pub bins: usize,
    pub mmce: f64,
}

/// Computes every metric; logit sets are sigmoid-mapped for the probability-space ones.
pub fn evaluate(preds: &PredictionSet, opts: &MetricOptions) -> Result<MetricReport> {
    let probs = preds.to_probability();
    let (smce, _) = smooth_ce(&probs)?;
    let pgap = pgap_sq(&probs)?;
    let (ece, bins) = binned_ece(&probs, opts.bins)?;
    let kce = mmce(&probs, opts.mmce_family, opts.mmce_bandwidth)?;
    let (dual, pgap_log) = match preds.space() {
        Space::Logit => (Some(dual_smooth_ce(preds)?.0), Some(pgap_logistic(preds)?)),
        Space::Probability => (None, None),
    };
    let correct = probs
        .values()
        .iter()
        .zip(probs.labels())
        .filter(|(&p, &y)| u8::from(p >= 0.5) == y)
        .count();
    Ok(MetricReport {
        n: preds.len(),
        accuracy: correct as f64 / preds.len() as f64,
        smce,
        dual_smce: dual,
        pgap_sq: pgap,
        pgap_logistic: pgap_log,
        binned_ece: ece,
        bins,
        mmce: kce,
    })
}

impl MetricReport {
    pub const CSV_HEADER: &'static str =
        "n,accuracy,smce,dual_smce,pgap_sq,pgap_logistic,binned_ece,bins,mmce";

    pub fn to_csv_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            fmt_f64(self.accuracy),
            fmt_f64(self.smce),
            fmt_opt(self.dual_smce),
            fmt_f64(self.pgap_sq),
            fmt_opt(self.pgap_logistic),
            fmt_f64(self.binned_ece),
            self.bins.to_string(),
            fmt_f64(self.mmce),
        ]
    }

    pub fn to_csv_row(&self) -> String {
        self.to_csv_fields().join(",")
    }

    /// Parses the nine fields written by [`to_csv_fields`](Self::to_csv_fields).
    pub fn from_csv_fields(fields: &[&str]) -> Result<MetricReport> {
        if fields.len() != 9 {
            return Err(Error::input(format!(
                "metric row has {} fields, expected 9",
                fields.len()
            )));
        }
        let int = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::input(format!("`{s}` is not a count")))
        };
        Ok(MetricReport {
            n: int(fields[0])?,
            accuracy: parse_f64(fields[1])?,
            smce: parse_f64(fields[2])?,
            dual_smce: parse_opt(fields[3])?,
            pgap_sq: parse_f64(fields[4])?,
            pgap_logistic: parse_opt(fields[5])?,
            binned_ece: parse_f64(fields[6])?,
            bins: int(fields[7])?,
            mmce: parse_f64(fields[8])?,
        })
    }

    /// Re-checks the sandwich relations between the metrics.
    pub fn validate(&self) -> Result<()> {
        let s = self.smce;
        let finite = [s, self.pgap_sq, self.binned_ece, self.mmce, self.accuracy]
            .iter()
            .chain(self.dual_smce.iter())
            .chain(self.pgap_logistic.iter())
            .all(|v| v.is_finite() && *v >= 0.0);
        if !finite {
            return Err(Error::input(
                "metric report holds a negative or non-finite value",
            ));
        }
        if s * s > self.pgap_sq + 1e-6 || self.pgap_sq > 2.0 * s + 1e-6 {
            return Err(Error::input(format!(
                "squared sandwich violated: smce {s}, pgap_sq {}",
                self.pgap_sq
            )));
        }
        if let (Some(d), Some(g)) = (self.dual_smce, self.pgap_logistic) {
            if 2.0 * d * d > g + 1e-6 || g > 4.0 * d + 2e-6 {
                return Err(Error::input(format!(
                    "dual sandwich violated: dual_smce {d}, pgap_logistic {g}"
                )));
            }
            if s > d + 1e-9 {
                return Err(Error::input(format!(
                    "primal-dual ordering violated: smce {s} > dual_smce {d}"
                )));
            }
        }
        if self.bins == 0 {
            return Err(Error::input("bin count must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_report() {
        let p = PredictionSet::probabilities(vec![0.5], vec![1]).unwrap();
        let r = evaluate(&p, &MetricOptions::default()).unwrap();
        assert_eq!(r.smce, 0.5);
        assert!((r.pgap_sq - 0.25).abs() < 1e-15);
        assert!((r.mmce - 0.5).abs() < 1e-15);
        assert_eq!(r.dual_smce, None);
        assert_eq!(r.accuracy, 1.0);
        r.validate().unwrap();
    }

    #[test]
    fn logit_report_carries_dual_metrics() {
        let g = PredictionSet::logits(vec![-1.0, 0.5, 2.0, 2.0], vec![0, 1, 0, 1]).unwrap();
        let r = evaluate(&g, &MetricOptions::default()).unwrap();
        assert!(r.dual_smce.is_some() && r.pgap_logistic.is_some());
        r.validate().unwrap();
    }

    #[test]
    fn csv_round_trip() {
        let g = PredictionSet::logits(vec![-1.0, 0.5, 2.0], vec![0, 1, 0]).unwrap();
        let r = evaluate(&g, &MetricOptions::default()).unwrap();
        let row = r.to_csv_row();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(MetricReport::from_csv_fields(&fields).unwrap(), r);
        let p = PredictionSet::probabilities(vec![0.2], vec![0]).unwrap();
        let r = evaluate(&p, &MetricOptions::default()).unwrap();
        let row = r.to_csv_row();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(MetricReport::from_csv_fields(&fields).unwrap(), r);
    }

    #[test]
    fn validate_catches_broken_sandwich() {
        let mut r = evaluate(
            &PredictionSet::probabilities(vec![0.2, 0.8], vec![1, 0]).unwrap(),
            &MetricOptions::default(),
        )
        .unwrap();
        r.pgap_sq = 0.9;
        assert!(r.validate().is_err());
    }
}
