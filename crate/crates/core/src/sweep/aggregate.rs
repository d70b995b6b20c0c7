//! Mean and standard deviation over repetitions, per cell and split.

use super::rows::{CellOutcome, Split, SweepRow};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, parse_f64};
use crate::kernels::KernelFamily;
use crate::models::LossFamily;

/// Aggregated columns, in file order.
pub const AGG_METRICS: [&str; 11] = [
    "accuracy",
    "smce",
    "dual_smce",
    "pgap_sq",
    "pgap_logistic",
    "binned_ece",
    "mmce",
    "base_smce",
    "ref_smce",
    "hilbert_norm",
    "objective",
];

fn metric_value(o: &CellOutcome, name: &str) -> Option<f64> {
    let m = &o.metrics;
    match name {
        "accuracy" => Some(m.accuracy),
        "smce" => Some(m.smce),
        "dual_smce" => m.dual_smce,
        "pgap_sq" => Some(m.pgap_sq),
        "pgap_logistic" => m.pgap_logistic,
        "binned_ece" => Some(m.binned_ece),
        "mmce" => Some(m.mmce),
        "base_smce" => Some(o.base_smce),
        "ref_smce" => Some(o.ref_smce),
        "hilbert_norm" => Some(o.hilbert_norm),
        "objective" => Some(o.objective),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Unbiased (`k − 1`) standard deviation; 0 for a single value.
    pub std: f64,
}

impl Stat {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Stat> {
        let k = values.len();
        if k == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let std = if k == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64).sqrt()
        };
        Some(Stat { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub n: usize,
    pub lambda: f64,
    pub kernel: KernelFamily,
    pub model: LossFamily,
    pub split: Split,
    /// Successful repetitions.
    pub seeds: usize,
    pub failed: usize,
    pub single_seed: bool,
    /// One entry per [`AGG_METRICS`] column.
    pub stats: Vec<Option<Stat>>,
}

impl AggregateRow {
    pub fn stat(&self, metric: &str) -> Option<Stat> {
        AGG_METRICS
            .iter()
            .position(|m| *m == metric)
            .and_then(|i| self.stats[i])
    }

    fn same_cell(&self, r: &SweepRow) -> bool {
        self.n == r.n
            && self.lambda.to_bits() == r.lambda.to_bits()
            && self.kernel == r.kernel
            && self.model == r.model
            && self.split == r.split
    }
}

/// Groups rows by `(n, λ, kernel, model, split)` in first-appearance order.
/// Values are summed in row order, so re-aggregating parsed rows is exact.
pub fn aggregate(rows: &[SweepRow]) -> Vec<AggregateRow> {
    let mut groups: Vec<(AggregateRow, Vec<&CellOutcome>)> = Vec::new();
    for r in rows {
        let pos = match groups.iter().position(|(g, _)| g.same_cell(r)) {
            Some(p) => p,
            None => {
                groups.push((
                    AggregateRow {
                        n: r.n,
                        lambda: r.lambda,
                        kernel: r.kernel,
                        model: r.model,
                        split: r.split,
                        seeds: 0,
                        failed: 0,
                        single_seed: false,
                        stats: Vec::new(),
                    },
                    Vec::new(),
                ));
                groups.len() - 1
            }
        };
        match &r.outcome {
            Ok(o) => groups[pos].1.push(o),
            Err(_) => groups[pos].0.failed += 1,
        }
    }
    groups
        .into_iter()
        .map(|(mut g, outcomes)| {
            g.seeds = outcomes.len();
            g.single_seed = outcomes.len() == 1;
            g.stats = AGG_METRICS
                .iter()
                .map(|m| {
                    let vals: Vec<f64> =
                        outcomes.iter().filter_map(|o| metric_value(o, m)).collect();
                    Stat::of(&vals)
                })
                .collect();
            g
        })
        .collect()
}

pub fn agg_header() -> String {
    let mut h = String::from("n,lambda,kernel,model,split,seeds,failed,single_seed");
    for m in AGG_METRICS {
        h.push_str(&format!(",{m}_mean,{m}_std"));
    }
    h
}

pub(crate) fn aggregates_to_csv(rows: &[AggregateRow]) -> String {
    let mut out = agg_header();
    out.push('\n');
    for a in rows {
        let mut f = vec![
            a.n.to_string(),
            fmt_f64(a.lambda),
            a.kernel.name().to_string(),
            a.model.model_name().to_string(),
            a.split.to_string(),
            a.seeds.to_string(),
            a.failed.to_string(),
            a.single_seed.to_string(),
        ];
        for s in &a.stats {
            match s {
                Some(s) => {
                    f.push(fmt_f64(s.mean));
                    f.push(fmt_f64(s.std));
                }
                None => f.extend([String::new(), String::new()]),
            }
        }
        out.push_str(&f.join(","));
        out.push('\n');
    }
    out
}

/// Parses an aggregates CSV written by a sweep.
pub fn read_aggregates(text: &str) -> Result<Vec<AggregateRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == agg_header() => {}
        _ => {
            return Err(Error::input(
                "aggregate file does not start with the expected header",
            ))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let at = |e: Error| Error::input(format!("line {}: {e}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 + 2 * AGG_METRICS.len() {
            return Err(at(Error::input(format!("{} fields", f.len()))));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::input(format!("`{s}` is not a count")))
        };
        let mut stats = Vec::with_capacity(AGG_METRICS.len());
        for j in 0..AGG_METRICS.len() {
            let (m, s) = (f[8 + 2 * j], f[9 + 2 * j]);
            stats.push(if m.is_empty() {
                None
            } else {
                Some(Stat {
                    mean: parse_f64(m).map_err(at)?,
                    std: parse_f64(s).map_err(at)?,
                })
            });
        }
        out.push(AggregateRow {
            n: int(f[0]).map_err(at)?,
            lambda: parse_f64(f[1]).map_err(at)?,
            kernel: f[2].parse().map_err(at)?,
            model: f[3].parse().map_err(at)?,
            split: f[4].parse().map_err(at)?,
            seeds: int(f[5]).map_err(at)?,
            failed: int(f[6]).map_err(at)?,
            single_seed: f[7] == "true",
            stats,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_examples() {
        let s = Stat::of(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 2f64.sqrt());
        assert_eq!(
            Stat::of(&[5.0]).unwrap(),
            Stat {
                mean: 5.0,
                std: 0.0
            }
        );
        assert!(Stat::of(&[]).is_none());
    }
}
