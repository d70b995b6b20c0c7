//! Qualitative trend checks on aggregated test smooth CE.

use std::fmt::Write as _;

use super::aggregate::AggregateRow;
use super::config::Axis;
use super::rows::Split;
use super::SweepResult;
use crate::error::Result;
use crate::format::fmt_f64;
use crate::kernels::KernelFamily;
use crate::models::LossFamily;

pub const SPEARMAN_THRESHOLD: f64 = -0.6;
pub const COLLAPSE_LAMBDA: f64 = 1e2;
pub const COLLAPSE_TOLERANCE: f64 = 0.05;
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendKind {
    /// Spearman correlation between n and mean test smooth CE.
    SampleSizeDecrease,
    /// The λ minimizing mean test smooth CE is not a grid endpoint.
    InteriorArgmin,
    /// At λ = 1e2, KLR test smooth CE is close to the base-rate predictor's.
    LargeLambdaCollapse,
}

impl TrendKind {
    pub fn name(self) -> &'static str {
        match self {
            TrendKind::SampleSizeDecrease => "spearman_n",
            TrendKind::InteriorArgmin => "interior_argmin",
            TrendKind::LargeLambdaCollapse => "klr_collapse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendCheck {
    pub kind: TrendKind,
    pub kernel: KernelFamily,
    pub model: LossFamily,
    /// Fixed sample size of a λ series.
    pub n: Option<usize>,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrendReport {
    pub checks: Vec<TrendCheck>,
}

impl TrendReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,kernel,model,n,value,threshold,pass\n");
        for c in &self.checks {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.kind.name(),
                c.kernel.name(),
                c.model.model_name(),
                c.n.map(|n| n.to_string()).unwrap_or_default(),
                fmt_f64(c.value),
                fmt_f64(c.threshold),
                c.pass
            )
            .unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        if self.checks.is_empty() {
            return "no trend checks (fewer than 4 grid points per series)\n".into();
        }
        let mut out = String::new();
        for c in &self.checks {
            let n = c.n.map(|n| format!(" n={n}")).unwrap_or_default();
            writeln!(
                out,
                "[{}] {} {}/{}{}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.kind.name(),
                c.kernel.name(),
                c.model.model_name(),
                n,
                c.detail
            )
            .unwrap();
        }
        out
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Kernel, model and (on the λ axis) the fixed sample size.
type SeriesKey = (KernelFamily, LossFamily, Option<usize>);

fn mean_of(a: &AggregateRow, metric: &str) -> f64 {
    a.stat(metric).map_or(f64::NAN, |s| s.mean)
}

/// Runs the trend checks that apply to `result`'s axis. Shape checks skip
/// series with fewer than four grid points.
pub fn assert_trends(result: &SweepResult) -> Result<TrendReport> {
    let test: Vec<&AggregateRow> = result
        .aggregates
        .iter()
        .filter(|a| a.split == Split::Test)
        .collect();
    let mut series: Vec<(SeriesKey, Vec<&AggregateRow>)> = Vec::new();
    for a in test {
        let key = (
            a.kernel,
            a.model,
            (result.axis == Axis::Lambda).then_some(a.n),
        );
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(a),
            None => series.push((key, vec![a])),
        }
    }
    let mut report = TrendReport::default();
    for ((kernel, model, n), pts) in series {
        let shaped = pts.len() >= MIN_POINTS;
        let smce: Vec<f64> = pts.iter().map(|a| mean_of(a, "smce")).collect();
        match result.axis {
            Axis::SampleSize if shaped => {
                let ns: Vec<f64> = pts.iter().map(|a| a.n as f64).collect();
                let rho = if smce.iter().any(|v| v.is_nan()) {
                    f64::NAN
                } else {
                    spearman(&ns, &smce)
                };
                report.checks.push(TrendCheck {
                    kind: TrendKind::SampleSizeDecrease,
                    kernel,
                    model,
                    n: None,
                    value: rho,
                    threshold: SPEARMAN_THRESHOLD,
                    pass: rho <= SPEARMAN_THRESHOLD,
                    detail: format!(
                        "spearman(n, mean test smce) = {rho:.4} (need <= {SPEARMAN_THRESHOLD})"
                    ),
                });
            }
            Axis::SampleSize => {}
            Axis::Lambda => {
                if shaped {
                    let best = smce
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| !v.is_nan())
                        .min_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(i, _)| i);
                    let interior = matches!(best, Some(i) if i > 0 && i + 1 < pts.len());
                    let at = best.map_or(f64::NAN, |i| pts[i].lambda);
                    report.checks.push(TrendCheck {
                        kind: TrendKind::InteriorArgmin,
                        kernel,
                        model,
                        n,
                        value: at,
                        threshold: f64::NAN,
                        pass: interior,
                        detail: format!(
                            "argmin lambda = {at:e} over [{:e}, {:e}]",
                            pts[0].lambda,
                            pts[pts.len() - 1].lambda
                        ),
                    });
                }
                if model == LossFamily::Logistic {
                    if let Some(a) = pts
                        .iter()
                        .find(|a| (a.lambda - COLLAPSE_LAMBDA).abs() <= 1e-9 * COLLAPSE_LAMBDA)
                    {
                        let gap = (mean_of(a, "smce") - mean_of(a, "base_smce")).abs();
                        report.checks.push(TrendCheck {
                            kind: TrendKind::LargeLambdaCollapse,
                            kernel,
                            model,
                            n,
                            value: gap,
                            threshold: COLLAPSE_TOLERANCE,
                            pass: gap <= COLLAPSE_TOLERANCE,
                            detail: format!("|smce - base_smce| at lambda=1e2 is {gap:.4} (need <= {COLLAPSE_TOLERANCE})"),
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::aggregate::Stat;
    use super::*;

    fn agg(n: usize, lambda: f64, smce: f64, base: f64) -> AggregateRow {
        let mut stats = vec![None; super::super::AGG_METRICS.len()];
        stats[1] = Some(Stat {
            mean: smce,
            std: 0.0,
        });
        stats[7] = Some(Stat {
            mean: base,
            std: 0.0,
        });
        AggregateRow {
            n,
            lambda,
            kernel: KernelFamily::Laplace,
            model: LossFamily::Logistic,
            split: Split::Test,
            seeds: 1,
            failed: 0,
            single_seed: true,
            stats,
        }
    }

    fn result(axis: Axis, aggregates: Vec<AggregateRow>) -> SweepResult {
        SweepResult {
            axis,
            rows: Vec::new(),
            aggregates,
        }
    }

    #[test]
    fn spearman_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]), -1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), 0.0);
        assert!(
            (spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]) - 0.948_683_298_050_513_8)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn monotone_rows_pass() {
        let r = result(
            Axis::SampleSize,
            (0..5)
                .map(|i| agg(100 << i, 0.01, 0.5 / (i + 1) as f64, 0.0))
                .collect(),
        );
        let t = assert_trends(&r).unwrap();
        assert_eq!(t.checks.len(), 1);
        assert_eq!(t.checks[0].value, -1.0);
        assert!(t.all_pass());
    }

    #[test]
    fn v_shape_passes_and_endpoint_fails() {
        let lams = [1e-4, 1e-2, 1.0, 1e2];
        let v = [0.3, 0.1, 0.2, 0.04];
        let r = result(
            Axis::Lambda,
            lams.iter()
                .zip(v)
                .map(|(&l, s)| agg(500, l, s, 0.02))
                .collect(),
        );
        let t = assert_trends(&r).unwrap();
        assert!(!t.checks[0].pass);
        assert!(t.checks[1].pass, "{}", t.to_text());
        let v = [0.3, 0.1, 0.2, 0.4];
        let r = result(
            Axis::Lambda,
            lams.iter()
                .zip(v)
                .map(|(&l, s)| agg(500, l, s, 0.02))
                .collect(),
        );
        let t = assert_trends(&r).unwrap();
        assert!(t.checks[0].pass);
        assert!(!t.checks[1].pass);
        assert!(t.to_csv().lines().count() == 3);
    }

    #[test]
    fn too_few_points_give_empty_report() {
        let r = result(
            Axis::SampleSize,
            (0..3).map(|i| agg(100 << i, 0.01, 0.1, 0.0)).collect(),
        );
        let t = assert_trends(&r).unwrap();
        assert!(t.checks.is_empty());
        assert!(t.to_text().starts_with("no trend checks"));
    }
}
