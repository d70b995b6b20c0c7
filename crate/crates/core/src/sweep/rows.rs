//! Per-cell result rows and their CSV form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::format::{fmt_f64, fmt_opt, parse_f64, parse_opt};
use crate::kernels::KernelFamily;
use crate::metrics::MetricReport;
use crate::models::LossFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::input(format!("unknown split `{s}`"))),
        }
    }
}

/// Everything measured for one split of a successful cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    /// Input-kernel bandwidth used for the fit.
    pub sigma: f64,
    pub hilbert_norm: f64,
    pub objective: f64,
    pub iterations: usize,
    pub err_n: Option<f64>,
    pub metrics: MetricReport,
    /// Smooth CE of the constant predictor at the training base rate.
    pub base_smce: f64,
    /// Smooth CE of the reference predictor (Bayes probability for toy data,
    /// the raw scores for score data).
    pub ref_smce: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rep: usize,
    pub n: usize,
    pub lambda: f64,
    pub kernel: KernelFamily,
    pub model: LossFamily,
    pub split: Split,
    pub cell_seed: u64,
    /// The error message for failed cells.
    pub outcome: std::result::Result<CellOutcome, String>,
}

pub const ROW_HEADER: &str = "rep,n,lambda,kernel,model,split,cell_seed,status,sigma,hilbert_norm,objective,iterations,err_n,\
n_eval,accuracy,smce,dual_smce,pgap_sq,pgap_logistic,binned_ece,bins,mmce,base_smce,ref_smce,message";

const FIELDS: usize = 25;

fn clean(msg: &str) -> String {
    msg.chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let mut f = vec![
            self.rep.to_string(),
            self.n.to_string(),
            fmt_f64(self.lambda),
            self.kernel.name().to_string(),
            self.model.model_name().to_string(),
            self.split.to_string(),
            self.cell_seed.to_string(),
        ];
        match &self.outcome {
            Ok(o) => {
                f.push("ok".into());
                f.push(fmt_f64(o.sigma));
                f.push(fmt_f64(o.hilbert_norm));
                f.push(fmt_f64(o.objective));
                f.push(o.iterations.to_string());
                f.push(fmt_opt(o.err_n));
                f.extend(o.metrics.to_csv_fields());
                f.push(fmt_f64(o.base_smce));
                f.push(fmt_f64(o.ref_smce));
                f.push(String::new());
            }
            Err(msg) => {
                f.push("failed".into());
                f.extend(std::iter::repeat_n(String::new(), FIELDS - 9));
                f.push(clean(msg));
            }
        }
        f.join(",")
    }

    /// Parses one CSV line and re-validates the metric relations.
    pub fn from_csv(line: &str) -> Result<SweepRow> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != FIELDS {
            return Err(Error::input(format!(
                "row has {} fields, expected {FIELDS}",
                f.len()
            )));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::input(format!("`{s}` is not a count")))
        };
        let outcome = match f[7] {
            "ok" => {
                let metrics = MetricReport::from_csv_fields(&f[13..22])?;
                metrics.validate()?;
                Ok(CellOutcome {
                    sigma: parse_f64(f[8])?,
                    hilbert_norm: parse_f64(f[9])?,
                    objective: parse_f64(f[10])?,
                    iterations: int(f[11])?,
                    err_n: parse_opt(f[12])?,
                    metrics,
                    base_smce: parse_f64(f[22])?,
                    ref_smce: parse_f64(f[23])?,
                })
            }
            "failed" => Err(f[24].to_string()),
            other => return Err(Error::input(format!("unknown status `{other}`"))),
        };
        Ok(SweepRow {
            rep: int(f[0])?,
            n: int(f[1])?,
            lambda: parse_f64(f[2])?,
            kernel: f[3].parse()?,
            model: f[4].parse()?,
            split: f[5].parse()?,
            cell_seed: f[6]
                .parse()
                .map_err(|_| Error::input(format!("`{}` is not a seed", f[6])))?,
            outcome,
        })
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(ROW_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Parses a rows CSV; errors carry the 1-based line number.
pub fn read_rows(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == ROW_HEADER => {}
        _ => {
            return Err(Error::input(
                "rows file does not start with the expected header",
            ))
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            SweepRow::from_csv(l.trim()).map_err(|e| Error::input(format!("line {}: {e}", i + 1)))
        })
        .collect()
}
