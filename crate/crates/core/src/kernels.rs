//! Gaussian and Laplace kernels, Gram matrices and the median bandwidth heuristic.
//!
//! Both families are shift invariant, positive definite and bounded by one:
//!
//! * Gaussian: `k(x, x') = exp(-‖x − x'‖² / (2σ²))`
//! * Laplace:  `k(x, x') = exp(-‖x − x'‖ / σ)`

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::points::{sq_dist, Points};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelFamily {
    Gaussian,
    Laplace,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(KernelFamily::Gaussian),
            "laplace" | "laplacian" => Ok(KernelFamily::Laplace),
            other => Err(Error::input(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// A kernel family together with its bandwidth `σ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::input(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KernelSpec { family, bandwidth })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Kernel value from a squared Euclidean distance.
    #[inline]
    pub fn from_sq_dist(&self, d2: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-d2 / (2.0 * self.bandwidth * self.bandwidth)).exp(),
            KernelFamily::Laplace => (-d2.sqrt() / self.bandwidth).exp(),
        }
    }

    /// Unchecked evaluation; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.from_sq_dist(sq_dist(a, b))
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::input("kernel inputs must have dimension >= 1"));
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Dense symmetric `n × n` matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    n: usize,
    data: Vec<f64>,
}

impl Gram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `K v`, rows computed independently.
    pub fn mul_vec(&self, v: &[f64], mode: Mode) -> Vec<f64> {
        exec::map_range(mode, self.n, |i| dot(self.row(i), v))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn gram_matrix(spec: &KernelSpec, x: &Points) -> Result<Gram> {
    gram_matrix_with(spec, x, Mode::default())
}

pub fn gram_matrix_with(spec: &KernelSpec, x: &Points, mode: Mode) -> Result<Gram> {
    let n = x.len();
    if n == 0 {
        return Err(Error::input("gram matrix needs at least one point"));
    }
    let mut data = vec![0.0; n * n];
    exec::fill_rows(mode, &mut data, n, |i, row| {
        let xi = x.row(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j {
                1.0
            } else {
                spec.eval_unchecked(xi, x.row(j))
            };
        }
    });
    // exact symmetry regardless of floating-point evaluation order
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    Ok(Gram { n, data })
}

/// `m × n` matrix with entry `(i, j) = k(a_i, b_j)`, row-major.
pub fn cross_kernel(spec: &KernelSpec, a: &Points, b: &Points, mode: Mode) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: a.dim(),
        });
    }
    let n = b.len();
    let mut out = vec![0.0; a.len() * n];
    exec::fill_rows(mode, &mut out, n, |i, row| {
        let ai = a.row(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = spec.eval_unchecked(ai, b.row(j));
        }
    });
    Ok(out)
}

/// Result of the median heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub sigma: f64,
    /// Set when every pairwise distance was zero and `σ = 1` was substituted.
    pub fallback: bool,
}

/// Pair counts below this are materialized and selected directly.
const MATERIALIZE_LIMIT: usize = 2_000_000;

/// Median of the `n(n−1)/2` pairwise Euclidean distances (`i < j`).
///
/// For an even number of pairs the two middle order statistics are averaged.
/// Large inputs are handled without materializing every pair: a bisection on
/// the distance narrows the bracket by counting, then the few remaining
/// candidates are selected exactly.
pub fn median_heuristic(x: &Points) -> Result<Bandwidth> {
    let n = x.len();
    if n < 2 {
        return Err(Error::input("median heuristic needs at least two points"));
    }
    let pairs = n * (n - 1) / 2;
    let lo_rank = (pairs - 1) / 2;
    let hi_rank = pairs / 2;
    let median = if x.dim() == 1 {
        let mut v = x.as_slice().to_vec();
        v.sort_by(f64::total_cmp);
        let a = kth_pair_diff_1d(&v, lo_rank);
        let b = if hi_rank == lo_rank {
            a
        } else {
            kth_pair_diff_1d(&v, hi_rank)
        };
        0.5 * (a + b)
    } else if pairs <= MATERIALIZE_LIMIT {
        let mut d: Vec<f64> = Vec::with_capacity(pairs);
        for i in 0..n {
            for j in i + 1..n {
                d.push(sq_dist(x.row(i), x.row(j)));
            }
        }
        let (_, a, _) = d.select_nth_unstable_by(lo_rank, f64::total_cmp);
        let a = *a;
        let b = if hi_rank == lo_rank {
            a
        } else {
            // the next order statistic is the minimum of the upper partition
            d[lo_rank + 1..]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        };
        0.5 * (a.sqrt() + b.sqrt())
    } else {
        let a = kth_pair_sq_dist(x, lo_rank, MATERIALIZE_LIMIT / 4).sqrt();
        let b = if hi_rank == lo_rank {
            a
        } else {
            kth_pair_sq_dist(x, hi_rank, MATERIALIZE_LIMIT / 4).sqrt()
        };
        0.5 * (a + b)
    };
    if median > 0.0 {
        Ok(Bandwidth {
            sigma: median,
            fallback: false,
        })
    } else {
        Ok(Bandwidth {
            sigma: 1.0,
            fallback: true,
        })
    }
}

/// Number of pairs `i < j` of sorted values with `v[j] − v[i] ≤ t`.
fn count_le_1d(v: &[f64], t: f64) -> usize {
    let mut count = 0;
    let mut i = 0;
    for j in 0..v.len() {
        while v[j] - v[i] > t {
            i += 1;
        }
        count += j - i;
    }
    count
}

/// `k`-th smallest (0-based) pairwise difference of sorted values.
fn kth_pair_diff_1d(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    if count_le_1d(v, 0.0) > k {
        return 0.0;
    }
    // invariant: count(≤ lo) ≤ k < count(≤ hi)
    let mut lo = 0.0_f64;
    let mut hi = v[n - 1] - v[0];
    loop {
        let below = count_le_1d(v, lo);
        let inside = count_le_1d(v, hi) - below;
        if inside <= n.max(64) {
            let mut cand = Vec::with_capacity(inside);
            let mut i = 0;
            for j in 0..n {
                while v[j] - v[i] > hi {
                    i += 1;
                }
                for &vi in &v[i..j] {
                    let d = v[j] - vi;
                    if d > lo {
                        cand.push(d);
                    }
                }
            }
            let (_, kth, _) = cand.select_nth_unstable_by(k - below, f64::total_cmp);
            return *kth;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if count_le_1d(v, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

fn count_le(x: &Points, t2: f64) -> usize {
    let n = x.len();
    exec::map_range(Mode::default(), n, |i| {
        let xi = x.row(i);
        (i + 1..n).filter(|&j| sq_dist(xi, x.row(j)) <= t2).count()
    })
    .into_iter()
    .sum()
}

/// `k`-th smallest squared pairwise distance without materializing all pairs.
fn kth_pair_sq_dist(x: &Points, k: usize, candidate_limit: usize) -> f64 {
    let n = x.len();
    let max = exec::map_range(Mode::default(), n, |i| {
        let xi = x.row(i);
        (i + 1..n)
            .map(|j| sq_dist(xi, x.row(j)))
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);
    if count_le(x, 0.0) > k {
        return 0.0;
    }
    let mut lo = 0.0_f64;
    let mut hi = max;
    loop {
        let below = count_le(x, lo);
        let inside = count_le(x, hi) - below;
        if inside <= candidate_limit {
            let mut cand = Vec::with_capacity(inside);
            for i in 0..n {
                for j in i + 1..n {
                    let d = sq_dist(x.row(i), x.row(j));
                    if d > lo && d <= hi {
                        cand.push(d);
                    }
                }
            }
            let (_, kth, _) = cand.select_nth_unstable_by(k - below, f64::total_cmp);
            return *kth;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if count_le(x, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}
