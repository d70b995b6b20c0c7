//! Random Fourier features for the Gaussian and Laplace kernels.
//!
//! Feature `j` is `√(2/D)·cos(ω_j·x + φ_j)` with phases uniform on `[0, 2π)`.
//! Gaussian frequencies are `N(0, σ⁻² I)`. Laplace frequencies follow the
//! multivariate Cauchy law `g / (σ|s|)` with `g ~ N(0, I)`, `s ~ N(0, 1)`,
//! whose characteristic function is `exp(−‖Δ‖/σ)` in every dimension (in one
//! dimension this is the standard Cauchy scaled by `1/σ`).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::kernels::{dot, KernelFamily, KernelSpec};
use crate::points::Points;

#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    family: KernelFamily,
    bandwidth: f64,
    seed: u64,
    dim: usize,
    /// `D × d`, row-major.
    frequencies: Vec<f64>,
    phases: Vec<f64>,
}

impl RffMap {
    /// Draws `features` frequencies for `spec` on `dim`-dimensional inputs.
    pub fn sample(spec: &KernelSpec, dim: usize, features: usize, seed: u64) -> Result<Self> {
        if features == 0 || dim == 0 {
            return Err(Error::input(
                "feature count and input dimension must be positive",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / spec.bandwidth();
        let mut frequencies = Vec::with_capacity(features * dim);
        let mut phases = Vec::with_capacity(features);
        for _ in 0..features {
            match spec.family() {
                KernelFamily::Gaussian => {
                    for _ in 0..dim {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        frequencies.push(g * scale);
                    }
                }
                KernelFamily::Laplace => {
                    let s: f64 = StandardNormal.sample(&mut rng);
                    let s = s.abs().max(f64::MIN_POSITIVE);
                    for _ in 0..dim {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        frequencies.push(g / s * scale);
                    }
                }
            }
            phases.push(rng.gen_range(0.0..std::f64::consts::TAU));
        }
        Ok(RffMap {
            family: spec.family(),
            bandwidth: spec.bandwidth(),
            seed,
            dim,
            frequencies,
            phases,
        })
    }

    /// Builds a map from explicit parameters (used by model deserialization).
    pub fn from_parts(
        spec: &KernelSpec,
        seed: u64,
        dim: usize,
        frequencies: Vec<f64>,
        phases: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || phases.is_empty() || frequencies.len() != phases.len() * dim {
            return Err(Error::input("inconsistent random feature parameters"));
        }
        Ok(RffMap {
            family: spec.family(),
            bandwidth: spec.bandwidth(),
            seed,
            dim,
            frequencies,
            phases,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn feature_count(&self) -> usize {
        self.phases.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec::new(self.family, self.bandwidth).expect("bandwidth validated at construction")
    }

    pub(crate) fn features_into(&self, x: &[f64], out: &mut [f64]) {
        let norm = (2.0 / self.feature_count() as f64).sqrt();
        for (j, o) in out.iter_mut().enumerate() {
            let w = &self.frequencies[j * self.dim..(j + 1) * self.dim];
            *o = norm * (dot(w, x) + self.phases[j]).cos();
        }
    }

    /// Feature matrix for many points, `n × D` row-major.
    pub fn transform(&self, x: &Points, mode: Mode) -> Result<Vec<f64>> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        let d = self.feature_count();
        let mut out = vec![0.0; x.len() * d];
        exec::fill_rows(mode, &mut out, d, |i, row| {
            self.features_into(x.row(i), row)
        });
        Ok(out)
    }
}

pub fn rff_features(map: &RffMap, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != map.dim {
        return Err(Error::DimensionMismatch {
            expected: map.dim,
            got: x.len(),
        });
    }
    let mut out = vec![0.0; map.feature_count()];
    map.features_into(x, &mut out);
    Ok(out)
}
