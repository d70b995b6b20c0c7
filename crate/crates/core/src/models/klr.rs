//! Kernel logistic regression by full-batch gradient descent.
//!
//! Steps are taken in the RKHS geometry: the loss part moves `α` (or `w`) along
//! the functional gradient and the ridge term is applied as its exact proximal
//! map, `θ ← (θ − η ∇loss) / (1 + 2ηλ)`, which stays stable for any `λ`. A
//! step that would increase the objective is rejected and the step size
//! halved, so accepted iterates never increase the objective.

use super::{
    validate_training, KernelChoice, KernelModel, LossFamily, Representation, TrainReport,
};
use crate::error::{Error, Result};
use crate::exec::Mode;
use crate::kernels::{dot, Gram};
use crate::metrics::{sigmoid, softplus};
use crate::points::Points;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlrOptions {
    pub max_iter: usize,
    pub step: f64,
    /// Stop once an accepted step lowers the objective by less than this.
    pub tolerance: f64,
    /// Also run a 10× longer reference optimization to estimate `err_n`.
    pub estimate_err: bool,
}

impl Default for KlrOptions {
    fn default() -> Self {
        KlrOptions {
            max_iter: 1000,
            step: 0.01,
            tolerance: 1e-6,
            estimate_err: false,
        }
    }
}

const MAX_CONSECUTIVE_REJECTS: usize = 50;

enum Design<'a> {
    Exact(&'a Gram),
    /// `n × D` feature matrix.
    Rff {
        z: &'a [f64],
        d: usize,
    },
}

impl Design<'_> {
    fn param_len(&self, n: usize) -> usize {
        match self {
            Design::Exact(_) => n,
            Design::Rff { d, .. } => *d,
        }
    }

    /// Functional gradient of the mean loss in parameter coordinates.
    fn direction(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len() as f64;
        match self {
            Design::Exact(_) => r.iter().map(|v| v / n).collect(),
            Design::Rff { z, d } => {
                let mut g = vec![0.0; *d];
                for (row, rv) in z.chunks(*d).zip(r) {
                    for (gj, zj) in g.iter_mut().zip(row) {
                        *gj += rv * zj / n;
                    }
                }
                g
            }
        }
    }

    /// Outputs of the kernel part for parameters `theta`.
    fn apply(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            Design::Exact(k) => k.mul_vec(theta, Mode::default()),
            Design::Rff { z, d } => z.chunks(*d).map(|row| dot(row, theta)).collect(),
        }
    }

    fn norm_sq(&self, theta: &[f64], outputs: &[f64]) -> f64 {
        match self {
            Design::Exact(_) => dot(theta, outputs).max(0.0),
            Design::Rff { .. } => dot(theta, theta),
        }
    }

    /// Gradient of the regularized objective in parameter coordinates.
    fn gradient(&self, r: &[f64], theta: &[f64], lambda: f64) -> Vec<f64> {
        let n = r.len() as f64;
        match self {
            Design::Exact(k) => {
                let inner: Vec<f64> = r
                    .iter()
                    .zip(theta)
                    .map(|(rv, a)| rv / n + 2.0 * lambda * a)
                    .collect();
                k.mul_vec(&inner, Mode::default())
            }
            Design::Rff { .. } => {
                let mut g = self.direction(r);
                for (gj, t) in g.iter_mut().zip(theta) {
                    *gj += 2.0 * lambda * t;
                }
                g
            }
        }
    }
}

struct RunState {
    theta: Vec<f64>,
    outputs: Vec<f64>,
    bias: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn logistic_objective(outputs: &[f64], bias: f64, y: &[f64], norm_sq: f64, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let risk: f64 = outputs
        .iter()
        .zip(y)
        .map(|(o, yi)| {
            let g = o + bias;
            softplus(g) - g * yi
        })
        .sum::<f64>()
        / n;
    risk + lambda * norm_sq
}

fn descend(
    design: &Design<'_>,
    y: &[f64],
    lambda: f64,
    max_iter: usize,
    step: f64,
    tolerance: f64,
    decay_every: Option<usize>,
) -> Result<RunState> {
    let n = y.len();
    let p = design.param_len(n);
    let mut st = RunState {
        theta: vec![0.0; p],
        outputs: vec![0.0; n],
        bias: 0.0,
        objective: 2f64.ln(),
        iterations: 0,
        converged: false,
    };
    let mut eta = step;
    let mut rejects = 0;
    for it in 0..max_iter {
        if let Some(every) = decay_every {
            if it > 0 && it % every == 0 {
                eta *= 0.5;
            }
        }
        st.iterations = it + 1;
        let r: Vec<f64> = st
            .outputs
            .iter()
            .zip(y)
            .map(|(o, yi)| sigmoid(o + st.bias) - yi)
            .collect();
        let dir = design.direction(&r);
        let adir = design.apply(&dir);
        let shrink = 1.0 / (1.0 + 2.0 * eta * lambda);
        let theta: Vec<f64> = st
            .theta
            .iter()
            .zip(&dir)
            .map(|(t, d)| (t - eta * d) * shrink)
            .collect();
        let outputs: Vec<f64> = st
            .outputs
            .iter()
            .zip(&adir)
            .map(|(o, a)| (o - eta * a) * shrink)
            .collect();
        let bias = st.bias - eta * r.iter().sum::<f64>() / n as f64;
        let norm_sq = design.norm_sq(&theta, &outputs);
        let obj = logistic_objective(&outputs, bias, y, norm_sq, lambda);
        if obj <= st.objective {
            let decrease = st.objective - obj;
            st.theta = theta;
            st.outputs = outputs;
            st.bias = bias;
            st.objective = obj;
            rejects = 0;
            if decrease <= tolerance {
                st.converged = true;
                break;
            }
        } else {
            rejects += 1;
            if rejects >= MAX_CONSECUTIVE_REJECTS {
                return Err(Error::Diverged {
                    iterations: it + 1,
                    step,
                });
            }
            eta *= 0.5;
        }
    }
    Ok(st)
}

/// Fits `g(x) = Σ α_i k(x, x_i) + b` (or the random-feature analogue) to the
/// regularized logistic objective `(1/n) Σ ψ(g(x_i)) − g(x_i) y_i + λ‖g − b‖²`.
pub fn fit_klr(
    x: &Points,
    y: &[u8],
    kernel: &KernelChoice,
    lambda: f64,
    opts: &KlrOptions,
) -> Result<(KernelModel, TrainReport)> {
    validate_training(x, y, lambda)?;
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::input("step size must be positive"));
    }
    if opts.max_iter == 0 {
        return Err(Error::input("max_iter must be positive"));
    }
    let yv: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let gram;
    let feats;
    let design = match kernel {
        KernelChoice::Exact(spec) => {
            gram = super::gram_for(spec, x)?;
            Design::Exact(&gram)
        }
        KernelChoice::Rff(map) => {
            feats = map.transform(x, Mode::default())?;
            Design::Rff {
                z: &feats,
                d: map.feature_count(),
            }
        }
    };
    let st = descend(
        &design,
        &yv,
        lambda,
        opts.max_iter,
        opts.step,
        opts.tolerance,
        None,
    )?;

    let r: Vec<f64> = st
        .outputs
        .iter()
        .zip(&yv)
        .map(|(o, yi)| sigmoid(o + st.bias) - yi)
        .collect();
    let grad = design.gradient(&r, &st.theta, lambda);
    let grad_b = r.iter().sum::<f64>() / r.len() as f64;
    let final_grad_norm = grad.iter().map(|g| g.abs()).fold(grad_b.abs(), f64::max);

    let err_n = if opts.estimate_err {
        let reference = descend(
            &design,
            &yv,
            lambda,
            opts.max_iter * 10,
            opts.step,
            0.0,
            Some(2000),
        )?;
        Some((st.objective - reference.objective.min(st.objective)).max(0.0))
    } else {
        None
    };

    let norm_sq = design.norm_sq(&st.theta, &st.outputs);
    let repr = match kernel {
        KernelChoice::Exact(spec) => Representation::Exact {
            kernel: *spec,
            support: x.clone(),
            alpha: st.theta,
        },
        KernelChoice::Rff(map) => Representation::Rff {
            map: map.clone(),
            weights: st.theta,
        },
    };
    let model = KernelModel {
        loss: LossFamily::Logistic,
        repr,
        bias: st.bias,
        lambda,
        hilbert_norm_sq: norm_sq,
        train_objective: st.objective,
    };
    let report = TrainReport {
        iterations: st.iterations,
        final_grad_norm,
        err_n,
        converged: st.converged,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelFamily, KernelSpec};
    use crate::models::objective;
    use rand::{Rng, SeedableRng};

    fn toy(n: usize, seed: u64) -> (Points, Vec<u8>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let x: Vec<f64> = y
            .iter()
            .map(|&l| if l == 1 { -1.0 } else { 1.0 } + rng.gen_range(-1.5..1.5))
            .collect();
        (Points::from_scalars(&x).unwrap(), y)
    }

    fn lap() -> KernelChoice {
        KernelChoice::Exact(KernelSpec::new(KernelFamily::Laplace, 1.0).unwrap())
    }

    #[test]
    fn balanced_identical_inputs_stay_at_zero() {
        let x = Points::from_scalars(&[0.5; 6]).unwrap();
        let (m, r) = fit_klr(
            &x,
            &[0, 1, 0, 1, 0, 1],
            &lap(),
            0.01,
            &KlrOptions::default(),
        )
        .unwrap();
        assert!(m.bias().abs() < 1e-12);
        assert!(m.hilbert_norm_sq() < 1e-20);
        assert!(r.converged);
    }

    #[test]
    fn objective_matches_independent_evaluation() {
        let (x, y) = toy(40, 1);
        let (m, r) = fit_klr(&x, &y, &lap(), 0.05, &KlrOptions::default()).unwrap();
        assert!(r.iterations <= 1000);
        let direct = objective(&m, &x, &y).unwrap();
        assert!((direct - m.train_objective()).abs() < 1e-12);
        assert!(m.train_objective() < 2f64.ln());
    }

    #[test]
    fn norm_budget_holds() {
        let (x, y) = toy(50, 2);
        for lambda in [1e-3, 1e-2, 1e-1, 1.0, 100.0] {
            let (m, _) = fit_klr(&x, &y, &lap(), lambda, &KlrOptions::default()).unwrap();
            assert!(m.hilbert_norm() <= (2f64.ln() / lambda).sqrt() + 1e-4);
        }
    }

    #[test]
    fn large_lambda_is_stable() {
        let (x, y) = toy(50, 3);
        let opts = KlrOptions {
            step: 1.0,
            ..KlrOptions::default()
        };
        let (m, _) = fit_klr(&x, &y, &lap(), 100.0, &opts).unwrap();
        let rate = y.iter().map(|&l| f64::from(l)).sum::<f64>() / 50.0;
        assert!((sigmoid(m.bias()) - rate).abs() < 0.02);
        assert!(m.hilbert_norm() < 1e-2);
    }

    #[test]
    fn reference_run_estimates_error() {
        let (x, y) = toy(30, 4);
        let opts = KlrOptions {
            estimate_err: true,
            ..KlrOptions::default()
        };
        let (_, r) = fit_klr(&x, &y, &lap(), 0.01, &opts).unwrap();
        assert!(r.err_n.unwrap() >= 0.0);
        let (_, r) = fit_klr(&x, &y, &lap(), 0.01, &KlrOptions::default()).unwrap();
        assert!(r.err_n.is_none());
    }

    #[test]
    fn rff_form_trains() {
        let (x, y) = toy(60, 5);
        let spec = KernelSpec::new(KernelFamily::Gaussian, 1.0).unwrap();
        let map = crate::rff::RffMap::sample(&spec, 1, 50, 1).unwrap();
        let opts = KlrOptions {
            step: 0.5,
            ..KlrOptions::default()
        };
        let (m, _) = fit_klr(&x, &y, &KernelChoice::Rff(map), 0.01, &opts).unwrap();
        assert!((objective(&m, &x, &y).unwrap() - m.train_objective()).abs() < 1e-12);
        assert!(m.train_objective() < 0.6);
    }

    #[test]
    fn bad_options() {
        let (x, y) = toy(5, 6);
        let opts = KlrOptions {
            step: 0.0,
            ..KlrOptions::default()
        };
        assert!(fit_klr(&x, &y, &lap(), 0.1, &opts).is_err());
    }
}
