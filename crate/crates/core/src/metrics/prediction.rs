use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Whether prediction values are probabilities or logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Probability,
    Logit,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Probability => "probability",
            Space::Logit => "logit",
        })
    }
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "probability" | "prob" => Ok(Space::Probability),
            "logit" => Ok(Space::Logit),
            other => Err(Error::input(format!("unknown prediction space `{other}`"))),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ψ(s) = log(1 + eˢ)`, evaluated without overflow.
#[inline]
pub fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// Paired predictions and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    values: Vec<f64>,
    labels: Vec<u8>,
    space: Space,
}

impl PredictionSet {
    pub fn new(values: Vec<f64>, labels: Vec<u8>, space: Space) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("prediction set is empty"));
        }
        if values.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: labels.len(),
            });
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::input(format!("label {l} is not 0 or 1")));
        }
        match space {
            Space::Probability => {
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::input(format!("probability {v} outside [0, 1]")));
                }
            }
            Space::Logit => {
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::input(format!("logit {v} is not finite")));
                }
            }
        }
        Ok(PredictionSet {
            values,
            labels,
            space,
        })
    }

    pub fn probabilities(values: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        PredictionSet::new(values, labels, Space::Probability)
    }

    pub fn logits(values: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        PredictionSet::new(values, labels, Space::Logit)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Probability of the positive class for sample `i`.
    #[inline]
    pub fn probability(&self, i: usize) -> f64 {
        match self.space {
            Space::Probability => self.values[i],
            Space::Logit => sigmoid(self.values[i]),
        }
    }

    /// The same samples in probability space (sigmoid-mapped for logits).
    pub fn to_probability(&self) -> PredictionSet {
        match self.space {
            Space::Probability => self.clone(),
            Space::Logit => PredictionSet {
                values: self.values.iter().map(|&g| sigmoid(g)).collect(),
                labels: self.labels.clone(),
                space: Space::Probability,
            },
        }
    }

    /// Concatenation of two sets in the same space.
    pub fn concat(&self, other: &PredictionSet) -> Result<PredictionSet> {
        if self.space != other.space {
            return Err(Error::input(
                "cannot concatenate prediction sets from different spaces",
            ));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(PredictionSet {
            values,
            labels,
            space: self.space,
        })
    }

    pub(crate) fn residual(&self, i: usize) -> f64 {
        f64::from(self.labels[i]) - self.probability(i)
    }
}

/// Samples sharing a prediction value, merged.
#[derive(Debug, Clone)]
pub(crate) struct Merged {
    /// Strictly increasing distinct values (in the set's own space).
    pub values: Vec<f64>,
    pub counts: Vec<f64>,
    /// Sum of labels per value.
    pub label_sums: Vec<f64>,
    /// Sum of `y − p` per value.
    pub residual_sums: Vec<f64>,
}

pub(crate) fn merge_ties(preds: &PredictionSet) -> Merged {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds.values[a].total_cmp(&preds.values[b]).then(a.cmp(&b)));
    let mut m = Merged {
        values: Vec::new(),
        counts: Vec::new(),
        label_sums: Vec::new(),
        residual_sums: Vec::new(),
    };
    for i in order {
        let v = preds.values[i];
        if m.values.last() != Some(&v) {
            m.values.push(v);
            m.counts.push(0.0);
            m.label_sums.push(0.0);
            m.residual_sums.push(0.0);
        }
        let j = m.values.len() - 1;
        m.counts[j] += 1.0;
        m.label_sums[j] += f64::from(preds.labels[i]);
        m.residual_sums[j] += preds.residual(i);
    }
    m
}
