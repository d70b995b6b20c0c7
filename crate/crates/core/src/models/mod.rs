//! L2-regularized kernel ERM with an unregularized bias.
//!
//! Models predict `f(x) = Σ_i α_i k(x, x_i) + b` (exact form) or
//! `f(x) = wᵀz(x) + b` (random-feature form). The `1/n` factor some texts put
//! on the dual coefficients is absorbed into `α`. The regularizer is the
//! squared RKHS norm of the kernel part only: `αᵀKα`, or `‖w‖²`.

mod io;
mod klr;
mod krr;

use std::fmt;
use std::str::FromStr;

pub use io::{read_model, write_model};
pub use klr::{fit_klr, KlrOptions};
pub use krr::fit_krr;

use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::kernels::{dot, gram_matrix_with, Gram, KernelSpec};
use crate::metrics::{sigmoid, softplus, PredictionSet, Space};
use crate::points::Points;
use crate::rff::RffMap;

/// Probabilities derived from regression outputs are clipped to this margin.
pub const PROBABILITY_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossFamily {
    Squared,
    Logistic,
}

impl LossFamily {
    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Squared => "squared",
            LossFamily::Logistic => "logistic",
        }
    }

    /// Short model name used in sweep output (`krr` / `klr`).
    pub fn model_name(self) -> &'static str {
        match self {
            LossFamily::Squared => "krr",
            LossFamily::Logistic => "klr",
        }
    }
}

impl fmt::Display for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.model_name())
    }
}

impl FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "squared" | "krr" => Ok(LossFamily::Squared),
            "logistic" | "klr" => Ok(LossFamily::Logistic),
            other => Err(Error::input(format!("unknown model `{other}`"))),
        }
    }
}

/// Exact kernel expansion or random-feature approximation.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Exact(KernelSpec),
    Rff(RffMap),
}

impl KernelChoice {
    /// Exact kernel up to `threshold` samples, `features` random features beyond.
    pub fn auto(
        spec: KernelSpec,
        dim: usize,
        n: usize,
        threshold: usize,
        features: usize,
        seed: u64,
    ) -> Result<Self> {
        if n <= threshold {
            Ok(KernelChoice::Exact(spec))
        } else {
            Ok(KernelChoice::Rff(RffMap::sample(
                &spec, dim, features, seed,
            )?))
        }
    }

    pub fn spec(&self) -> KernelSpec {
        match self {
            KernelChoice::Exact(s) => *s,
            KernelChoice::Rff(m) => m.kernel_spec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Exact {
        kernel: KernelSpec,
        support: Points,
        alpha: Vec<f64>,
    },
    Rff {
        map: RffMap,
        weights: Vec<f64>,
    },
}

/// A trained (or hand-built) kernel model. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub(crate) loss: LossFamily,
    pub(crate) repr: Representation,
    pub(crate) bias: f64,
    pub(crate) lambda: f64,
    pub(crate) hilbert_norm_sq: f64,
    pub(crate) train_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub final_grad_norm: f64,
    /// Optimization error `L_n(f) − L_n(f*)`. Exactly zero for closed-form KRR;
    /// for KLR only present when a reference run was requested.
    pub err_n: Option<f64>,
    pub converged: bool,
}

/// Raw model outputs plus their probability view.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub loss: LossFamily,
    /// Regression values (squared loss) or logits (logistic loss).
    pub raw: Vec<f64>,
    /// Clipped regression values or sigmoid of the logits.
    pub probabilities: Vec<f64>,
}

impl Predictions {
    /// Prediction set for metric evaluation: probability space for regression
    /// models, logit space for logistic ones.
    pub fn to_prediction_set(&self, labels: &[u8]) -> Result<PredictionSet> {
        match self.loss {
            LossFamily::Squared => PredictionSet::new(
                self.probabilities.clone(),
                labels.to_vec(),
                Space::Probability,
            ),
            LossFamily::Logistic => {
                PredictionSet::new(self.raw.clone(), labels.to_vec(), Space::Logit)
            }
        }
    }
}

pub(crate) fn validate_training(x: &Points, y: &[u8], lambda: f64) -> Result<()> {
    if x.is_empty() {
        return Err(Error::input("training set is empty"));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::input("labels must be 0 or 1"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::input(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(())
}

impl KernelModel {
    /// Builds an exact-form model from explicit coefficients; the Hilbert norm is
    /// recomputed from the Gram matrix of `support`.
    pub fn exact(
        loss: LossFamily,
        kernel: KernelSpec,
        support: Points,
        alpha: Vec<f64>,
        bias: f64,
        lambda: f64,
    ) -> Result<Self> {
        if alpha.len() != support.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: alpha.len(),
            });
        }
        let gram = gram_matrix_with(&kernel, &support, Mode::default())?;
        let hilbert_norm_sq = dot(&alpha, &gram.mul_vec(&alpha, Mode::default())).max(0.0);
        Ok(KernelModel {
            loss,
            repr: Representation::Exact {
                kernel,
                support,
                alpha,
            },
            bias,
            lambda,
            hilbert_norm_sq,
            train_objective: f64::NAN,
        })
    }

    pub fn rff(
        loss: LossFamily,
        map: RffMap,
        weights: Vec<f64>,
        bias: f64,
        lambda: f64,
    ) -> Result<Self> {
        if weights.len() != map.feature_count() {
            return Err(Error::DimensionMismatch {
                expected: map.feature_count(),
                got: weights.len(),
            });
        }
        let hilbert_norm_sq = dot(&weights, &weights);
        Ok(KernelModel {
            loss,
            repr: Representation::Rff { map, weights },
            bias,
            lambda,
            hilbert_norm_sq,
            train_objective: f64::NAN,
        })
    }

    pub fn loss(&self) -> LossFamily {
        self.loss
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn hilbert_norm_sq(&self) -> f64 {
        self.hilbert_norm_sq
    }

    pub fn hilbert_norm(&self) -> f64 {
        self.hilbert_norm_sq.sqrt()
    }

    /// Regularized objective on the training set at fit time (NaN for hand-built models).
    pub fn train_objective(&self) -> f64 {
        self.train_objective
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        match &self.repr {
            Representation::Exact { kernel, .. } => *kernel,
            Representation::Rff { map, .. } => map.kernel_spec(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.repr {
            Representation::Exact { support, .. } => support.dim(),
            Representation::Rff { map, .. } => map.input_dim(),
        }
    }

    /// Raw outputs `Σ α_i k(x, x_i) + b` (or `wᵀz(x) + b`) for every row of `x`.
    pub fn decision(&self, x: &Points) -> Result<Vec<f64>> {
        if x.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.dim(),
            });
        }
        let mode = Mode::default();
        let out = match &self.repr {
            Representation::Exact {
                kernel,
                support,
                alpha,
            } => exec::map_range(mode, x.len(), |i| {
                let xi = x.row(i);
                let s: f64 = support
                    .rows()
                    .zip(alpha)
                    .map(|(sj, a)| a * kernel.eval_unchecked(xi, sj))
                    .sum();
                s + self.bias
            }),
            Representation::Rff { map, weights } => {
                let z = map.transform(x, mode)?;
                let d = map.feature_count();
                z.chunks(d)
                    .map(|row| dot(row, weights) + self.bias)
                    .collect()
            }
        };
        Ok(out)
    }

    pub fn predict(&self, x: &Points) -> Result<Predictions> {
        let raw = self.decision(x)?;
        let probabilities = match self.loss {
            LossFamily::Squared => raw
                .iter()
                .map(|v| v.clamp(PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP))
                .collect(),
            LossFamily::Logistic => raw.iter().map(|&g| sigmoid(g)).collect(),
        };
        Ok(Predictions {
            loss: self.loss,
            raw,
            probabilities,
        })
    }
}

pub fn predict(model: &KernelModel, x: &Points) -> Result<Predictions> {
    model.predict(x)
}

/// Mean loss of raw outputs.
pub(crate) fn empirical_risk(loss: LossFamily, raw: &[f64], y: &[u8]) -> f64 {
    let n = raw.len() as f64;
    match loss {
        LossFamily::Squared => {
            raw.iter()
                .zip(y)
                .map(|(f, &l)| {
                    let r = f64::from(l) - f;
                    r * r
                })
                .sum::<f64>()
                / n
        }
        LossFamily::Logistic => {
            raw.iter()
                .zip(y)
                .map(|(&g, &l)| softplus(g) - g * f64::from(l))
                .sum::<f64>()
                / n
        }
    }
}

/// Regularized empirical objective of `model` on `(x, y)`; the bias is not penalized.
pub fn objective(model: &KernelModel, x: &Points, y: &[u8]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::input("objective needs at least one sample"));
    }
    let raw = model.decision(x)?;
    Ok(empirical_risk(model.loss, &raw, y) + model.lambda * model.hilbert_norm_sq)
}

/// Gradient of [`objective`] with respect to the model's own parameters
/// (`α` or `w`) and the bias, evaluated on `(x, y)`. For exact models `x`
/// must be the support set.
pub fn objective_gradient(model: &KernelModel, x: &Points, y: &[u8]) -> Result<(Vec<f64>, f64)> {
    let n = x.len() as f64;
    let raw = model.decision(x)?;
    if raw.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: raw.len(),
            got: y.len(),
        });
    }
    // derivative of the mean loss with respect to each output, times n
    let dloss: Vec<f64> = raw
        .iter()
        .zip(y)
        .map(|(&f, &l)| match model.loss {
            LossFamily::Squared => 2.0 * (f - f64::from(l)),
            LossFamily::Logistic => sigmoid(f) - f64::from(l),
        })
        .collect();
    let grad_b = dloss.iter().sum::<f64>() / n;
    let mode = Mode::default();
    let grad = match &model.repr {
        Representation::Exact {
            kernel,
            support,
            alpha,
        } => {
            if support != x {
                return Err(Error::input(
                    "exact-model gradient must be evaluated on the support set",
                ));
            }
            let gram = gram_matrix_with(kernel, support, mode)?;
            // ∇α = K (dloss / n + 2λα)
            let inner: Vec<f64> = dloss
                .iter()
                .zip(alpha)
                .map(|(d, a)| d / n + 2.0 * model.lambda * a)
                .collect();
            gram.mul_vec(&inner, mode)
        }
        Representation::Rff { map, weights } => {
            let z = map.transform(x, mode)?;
            let d = map.feature_count();
            let mut g: Vec<f64> = weights.iter().map(|w| 2.0 * model.lambda * w).collect();
            for (row, dl) in z.chunks(d).zip(&dloss) {
                for (gj, zj) in g.iter_mut().zip(row) {
                    *gj += dl * zj / n;
                }
            }
            g
        }
    };
    Ok((grad, grad_b))
}

/// `√(λ + err_n)`: the training smooth-CE bound for a squared-loss model.
pub fn training_smce_bound(model: &KernelModel, report: &TrainReport) -> Result<f64> {
    if model.loss != LossFamily::Squared {
        return Err(Error::input(
            "the training bound applies to squared-loss models",
        ));
    }
    let err = report
        .err_n
        .ok_or_else(|| Error::input("optimization error unknown for this fit"))?;
    Ok((model.lambda + err.max(0.0)).sqrt())
}

pub(crate) fn gram_for(kernel: &KernelSpec, x: &Points) -> Result<Gram> {
    gram_matrix_with(kernel, x, Mode::default())
}
