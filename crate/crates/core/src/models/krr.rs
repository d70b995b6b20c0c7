//! Closed-form kernel ridge regression with an unregularized bias.
//!
//! Stationarity of `(1/n)‖y − Kα − b1‖² + λαᵀKα` in `(α, b)` is the bordered
//! system `(K + nλI)α + b1 = y`, `1ᵀα = 0`. With `A = K + nλI` (SPD), one
//! Cholesky factorization gives `u = A⁻¹y`, `v = A⁻¹1`, then
//! `b = 1ᵀu / 1ᵀv` and `α = u − b v`.

use faer::prelude::SpSolver;
use faer::{Mat, Side};

use super::{
    empirical_risk, gram_for, validate_training, KernelChoice, KernelModel, LossFamily,
    Representation, TrainReport,
};
use crate::error::{Error, Result};
use crate::exec::Mode;
use crate::kernels::dot;
use crate::points::Points;

const JITTER: f64 = 1e-10;

pub fn fit_krr(
    x: &Points,
    y: &[u8],
    kernel: &KernelChoice,
    lambda: f64,
) -> Result<(KernelModel, TrainReport)> {
    validate_training(x, y, lambda)?;
    match kernel {
        KernelChoice::Exact(spec) => fit_exact(x, y, *spec, lambda),
        KernelChoice::Rff(map) => fit_rff(x, y, map.clone(), lambda),
    }
}

fn fit_exact(
    x: &Points,
    y: &[u8],
    spec: crate::kernels::KernelSpec,
    lambda: f64,
) -> Result<(KernelModel, TrainReport)> {
    let n = x.len();
    let nf = n as f64;
    let gram = gram_for(&spec, x)?;
    let ridge = nf * lambda + JITTER;
    let a = Mat::<f64>::from_fn(n, n, |i, j| {
        gram.get(i, j) + if i == j { ridge } else { 0.0 }
    });
    let chol = a.cholesky(Side::Lower).map_err(|_| Error::Numerical {
        msg: "kernel ridge system is not positive definite".into(),
        condition: (nf + ridge) / ridge,
    })?;
    let yv: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let rhs = Mat::<f64>::from_fn(n, 2, |i, j| if j == 0 { yv[i] } else { 1.0 });
    let sol = chol.solve(&rhs);
    let u: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let v: Vec<f64> = (0..n).map(|i| sol[(i, 1)]).collect();
    let sum_v: f64 = v.iter().sum();
    if !(sum_v.is_finite() && sum_v > 0.0) {
        return Err(Error::Numerical {
            msg: "bias elimination failed".into(),
            condition: (nf + ridge) / ridge,
        });
    }
    let bias = u.iter().sum::<f64>() / sum_v;
    let alpha: Vec<f64> = u.iter().zip(&v).map(|(ui, vi)| ui - bias * vi).collect();
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numerical {
            msg: "non-finite dual coefficients".into(),
            condition: (nf + ridge) / ridge,
        });
    }

    let k_alpha = gram.mul_vec(&alpha, Mode::default());
    let hilbert_norm_sq = dot(&alpha, &k_alpha).max(0.0);
    let outputs: Vec<f64> = k_alpha.iter().map(|v| v + bias).collect();
    let train_objective =
        empirical_risk(LossFamily::Squared, &outputs, y) + lambda * hilbert_norm_sq;

    // ∇α = (2/n) K (f − y + nλα),  ∇b = (2/n) Σ (f − y)
    let inner: Vec<f64> = (0..n)
        .map(|i| outputs[i] - yv[i] + nf * lambda * alpha[i])
        .collect();
    let grad_alpha = gram.mul_vec(&inner, Mode::default());
    let grad_b = 2.0 * (0..n).map(|i| outputs[i] - yv[i]).sum::<f64>() / nf;
    let grad_norm = grad_alpha
        .iter()
        .map(|g| (2.0 * g / nf).abs())
        .fold(grad_b.abs(), f64::max);

    let model = KernelModel {
        loss: LossFamily::Squared,
        repr: Representation::Exact {
            kernel: spec,
            support: x.clone(),
            alpha,
        },
        bias,
        lambda,
        hilbert_norm_sq,
        train_objective,
    };
    let report = TrainReport {
        iterations: 0,
        final_grad_norm: grad_norm,
        err_n: Some(0.0),
        converged: true,
    };
    Ok((model, report))
}

/// Ridge regression on centered random features; the bias absorbs the means.
fn fit_rff(
    x: &Points,
    y: &[u8],
    map: crate::rff::RffMap,
    lambda: f64,
) -> Result<(KernelModel, TrainReport)> {
    let n = x.len();
    let nf = n as f64;
    let d = map.feature_count();
    let z = map.transform(x, Mode::default())?;
    let yv: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let ybar = yv.iter().sum::<f64>() / nf;
    let mut zbar = vec![0.0; d];
    for row in z.chunks(d) {
        for (m, v) in zbar.iter_mut().zip(row) {
            *m += v / nf;
        }
    }
    let mut gram = Mat::<f64>::zeros(d, d);
    let mut rhs = Mat::<f64>::zeros(d, 1);
    for (row, &yi) in z.chunks(d).zip(&yv) {
        for a in 0..d {
            let za = row[a] - zbar[a];
            rhs[(a, 0)] += za * (yi - ybar) / nf;
            for b in 0..=a {
                gram[(a, b)] += za * (row[b] - zbar[b]) / nf;
            }
        }
    }
    for a in 0..d {
        gram[(a, a)] += lambda + JITTER;
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let chol = gram.cholesky(Side::Lower).map_err(|_| Error::Numerical {
        msg: "random-feature ridge system is not positive definite".into(),
        condition: (2.0 + lambda) / lambda,
    })?;
    let sol = chol.solve(&rhs);
    let weights: Vec<f64> = (0..d).map(|a| sol[(a, 0)]).collect();
    let bias = ybar - dot(&zbar, &weights);
    let outputs: Vec<f64> = z.chunks(d).map(|row| dot(row, &weights) + bias).collect();
    let hilbert_norm_sq = dot(&weights, &weights);
    let train_objective =
        empirical_risk(LossFamily::Squared, &outputs, y) + lambda * hilbert_norm_sq;
    let mut grad = weights.iter().map(|w| 2.0 * lambda * w).collect::<Vec<_>>();
    let mut grad_b = 0.0;
    for (row, (&f, &yi)) in z.chunks(d).zip(outputs.iter().zip(&yv)) {
        let r = 2.0 * (f - yi) / nf;
        grad_b += r;
        for (g, zj) in grad.iter_mut().zip(row) {
            *g += r * zj;
        }
    }
    let grad_norm = grad.iter().map(|g| g.abs()).fold(grad_b.abs(), f64::max);
    let model = KernelModel {
        loss: LossFamily::Squared,
        repr: Representation::Rff { map, weights },
        bias,
        lambda,
        hilbert_norm_sq,
        train_objective,
    };
    let report = TrainReport {
        iterations: 0,
        final_grad_norm: grad_norm,
        err_n: Some(0.0),
        converged: true,
    };
    Ok((model, report))
}
