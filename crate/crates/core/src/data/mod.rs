//! Synthetic data, score files and deterministic seeding.

mod files;

pub use files::{
    build_recalibration_set, read_dataset, read_predictions, write_dataset, write_predictions,
    write_scores,
};

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::{sigmoid, PredictionSet, Space};
use crate::points::Points;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SyntheticGaussian,
    ScoreFile,
    RecalibrationDerived,
}

/// Inputs with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: Points,
    pub y: Vec<u8>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

impl LabeledDataset {
    pub fn new(x: Points, y: Vec<u8>, provenance: Provenance, seed: Option<u64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::input("dataset is empty"));
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
        Ok(LabeledDataset {
            x,
            y,
            provenance,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Keeps the first `k` input coordinates.
    pub fn project(&self, k: usize) -> Result<LabeledDataset> {
        Ok(LabeledDataset {
            x: self.x.project(k)?,
            ..self.clone()
        })
    }

    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            x: self.x.select(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            provenance: self.provenance,
            seed: self.seed,
        }
    }

    pub fn base_rate(&self) -> f64 {
        self.y.iter().map(|&l| f64::from(l)).sum::<f64>() / self.len() as f64
    }
}

/// One-dimensional scores from a base model with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RecalibrationSet {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub source_model_id: String,
    /// Declared by a `# space=` comment in the score file, if any.
    pub space: Option<Space>,
}

impl RecalibrationSet {
    pub fn new(
        scores: Vec<f64>,
        labels: Vec<u8>,
        source_model_id: impl Into<String>,
        space: Option<Space>,
    ) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::input("score set is empty"));
        }
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: scores.len(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::input("labels must be 0 or 1"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::input("scores must be finite"));
        }
        Ok(RecalibrationSet {
            scores,
            labels,
            source_model_id: source_model_id.into(),
            space,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Scores as one-dimensional training inputs.
    pub fn to_dataset(&self) -> LabeledDataset {
        LabeledDataset {
            x: Points::from_scalars(&self.scores).expect("scores are finite"),
            y: self.labels.clone(),
            provenance: Provenance::RecalibrationDerived,
            seed: None,
        }
    }

    /// The raw scores as a prediction set in `space`.
    pub fn to_prediction_set(&self, space: Space) -> Result<PredictionSet> {
        PredictionSet::new(self.scores.clone(), self.labels.clone(), space)
    }

    pub fn select(&self, indices: &[usize]) -> RecalibrationSet {
        RecalibrationSet {
            scores: indices.iter().map(|&i| self.scores[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            source_model_id: self.source_model_id.clone(),
            space: self.space,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of seed components.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5eed_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

const MU_POSITIVE: f64 = -1.0;
const MU_NEGATIVE: f64 = 1.0;

/// Two-dimensional Gaussian toy data: `y ~ Bernoulli(1/2)`,
/// `x | y=1 ~ N((−1,−1), I)`, `x | y=0 ~ N((1,1), I)`.
pub fn gen_toy(n: usize, seed: u64) -> Result<LabeledDataset> {
    gen_toy_dim(n, 2, seed)
}

/// First coordinate of [`gen_toy`]: the univariate variant.
pub fn gen_toy_1d(n: usize, seed: u64) -> Result<LabeledDataset> {
    gen_toy(n, seed)?.project(1)
}

fn gen_toy_dim(n: usize, dim: usize, seed: u64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * dim);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.gen_bool(0.5);
        let mu = if label { MU_POSITIVE } else { MU_NEGATIVE };
        for _ in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            x.push(mu + z);
        }
        y.push(u8::from(label));
    }
    LabeledDataset::new(
        Points::new(x, dim)?,
        y,
        Provenance::SyntheticGaussian,
        Some(seed),
    )
}

/// Log-odds of `y=1` under the toy model: `−2·Σx`. Valid for the 2-D data
/// and its 1-D projection alike.
pub fn bayes_logit(x: &[f64]) -> f64 {
    -2.0 * x.iter().sum::<f64>()
}

pub fn bayes_probability(x: &[f64]) -> f64 {
    sigmoid(bayes_logit(x))
}

/// `m` rows drawn without replacement with class counts within one of the
/// proportional allocation. Rows keep their original relative order.
pub fn stratified_subsample(data: &LabeledDataset, m: usize, seed: u64) -> Result<LabeledDataset> {
    let n = data.len();
    if m == 0 || m > n {
        return Err(Error::input(format!("subsample size {m} outside 1..={n}")));
    }
    let mut ones: Vec<usize> = (0..n).filter(|&i| data.y[i] == 1).collect();
    let mut zeros: Vec<usize> = (0..n).filter(|&i| data.y[i] == 0).collect();
    let mut take_ones = ((m * ones.len()) as f64 / n as f64).round() as usize;
    if m >= 2 && !ones.is_empty() && !zeros.is_empty() {
        take_ones = take_ones.clamp(1, m - 1);
    }
    take_ones = take_ones.min(ones.len()).max(m.saturating_sub(zeros.len()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ones.shuffle(&mut rng);
    zeros.shuffle(&mut rng);
    let mut chosen: Vec<usize> = ones[..take_ones]
        .iter()
        .chain(&zeros[..m - take_ones])
        .copied()
        .collect();
    chosen.sort_unstable();
    Ok(data.select(&chosen))
}

/// How [`gen_miscalibrated_scores`] distorts the Bayes logit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distortion {
    /// `logit / t`; `t < 1` makes scores overconfident.
    Temperature(f64),
    /// `a·logit + c`.
    Affine(f64, f64),
}

impl Distortion {
    fn validate(self) -> Result<()> {
        match self {
            Distortion::Temperature(t) if !(t > 0.0 && t.is_finite()) => Err(Error::input(
                format!("temperature must be positive, got {t}"),
            )),
            Distortion::Affine(a, c) if !(a.is_finite() && c.is_finite()) => {
                Err(Error::input("affine distortion parameters must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(self, logit: f64) -> f64 {
        match self {
            Distortion::Temperature(t) => logit / t,
            Distortion::Affine(a, c) => a * logit + c,
        }
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distortion::Temperature(t) => write!(f, "temperature:{t}"),
            Distortion::Affine(a, c) => write!(f, "affine:{a}:{c}"),
        }
    }
}

impl FromStr for Distortion {
    type Err = Error;

    /// `temperature:T` or `affine:A:C`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::input(format!("bad number `{v}` in distortion `{s}`")))
        };
        let d = match parts.as_slice() {
            [kind, t] if kind.eq_ignore_ascii_case("temperature") => {
                Distortion::Temperature(num(t)?)
            }
            [kind, a, c] if kind.eq_ignore_ascii_case("affine") => {
                Distortion::Affine(num(a)?, num(c)?)
            }
            _ => return Err(Error::input(format!("unknown distortion `{s}`"))),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Distorted Bayes logits on 2-D toy data, with the true labels. Stands in
/// for the scores of a miscalibrated base model.
pub fn gen_miscalibrated_scores(
    n: usize,
    distortion: Distortion,
    seed: u64,
) -> Result<RecalibrationSet> {
    distortion.validate()?;
    let data = gen_toy(n, seed)?;
    let scores = data
        .x
        .rows()
        .map(|r| distortion.apply(bayes_logit(r)))
        .collect();
    RecalibrationSet::new(
        scores,
        data.y,
        format!("toy2d-{distortion}-seed{seed}"),
        Some(Space::Logit),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::smooth_ce;
    use proptest::prelude::*;

    #[test]
    fn toy_is_deterministic() {
        assert_eq!(gen_toy(10, 3).unwrap(), gen_toy(10, 3).unwrap());
        assert_ne!(gen_toy(10, 3).unwrap(), gen_toy(10, 4).unwrap());
        assert!(gen_toy(0, 1).is_err());
    }

    #[test]
    fn toy_moments() {
        let d = gen_toy(50_000, 11).unwrap();
        assert!((d.base_rate() - 0.5).abs() < 0.01);
        for c in 0..2 {
            let pos: Vec<f64> = (0..d.len())
                .filter(|&i| d.y[i] == 1)
                .map(|i| d.x.row(i)[c])
                .collect();
            let mean = pos.iter().sum::<f64>() / pos.len() as f64;
            assert!((mean + 1.0).abs() < 0.05, "{mean}");
        }
    }

    #[test]
    fn projection_matches_first_coordinate() {
        let d2 = gen_toy(20, 5).unwrap();
        let d1 = gen_toy_1d(20, 5).unwrap();
        assert_eq!(d1.dim(), 1);
        for i in 0..20 {
            assert_eq!(d1.x.row(i)[0], d2.x.row(i)[0]);
        }
    }

    #[test]
    fn bayes_values() {
        assert_eq!(bayes_probability(&[0.0, 0.0]), 0.5);
        assert!((bayes_probability(&[-1.0, -1.0]) - 0.982_013_790_037_908_5).abs() < 1e-12);
        assert!((bayes_probability(&[1.0, 1.0]) - 0.017_986_209_962_091_56).abs() < 1e-12);
    }

    #[test]
    fn bayes_matches_frequencies_by_decile() {
        let d = gen_toy(100_000, 2).unwrap();
        let mut bins = vec![(0.0, 0.0, 0usize); 10];
        for (row, &l) in d.x.rows().zip(&d.y) {
            let p = bayes_probability(row);
            let b = ((p * 10.0) as usize).min(9);
            bins[b].0 += p;
            bins[b].1 += f64::from(l);
            bins[b].2 += 1;
        }
        for (ps, ys, c) in bins {
            let c = c as f64;
            assert!((ps / c - ys / c).abs() <= 3.0 / c.sqrt());
        }
    }

    fn sixty_forty() -> LabeledDataset {
        let y: Vec<u8> = (0..10).map(|i| u8::from(i < 6)).collect();
        let x = Points::from_scalars(&(0..10).map(f64::from).collect::<Vec<_>>()).unwrap();
        LabeledDataset::new(x, y, Provenance::SyntheticGaussian, None).unwrap()
    }

    #[test]
    fn stratified_examples() {
        let d = gen_toy(100, 1).unwrap();
        let s = stratified_subsample(&d, 100, 9).unwrap();
        assert_eq!(s, d);
        let y: Vec<u8> = (0..50).map(|i| u8::from(i < 30)).collect();
        let d = LabeledDataset::new(
            Points::from_scalars(&vec![0.0; 50]).unwrap(),
            y,
            Provenance::ScoreFile,
            None,
        )
        .unwrap();
        let s = stratified_subsample(&d, 10, 1).unwrap();
        assert_eq!(s.y.iter().filter(|&&l| l == 1).count(), 6);
        assert!(stratified_subsample(&d, 51, 1).is_err());
        assert!(stratified_subsample(&d, 0, 1).is_err());
    }

    proptest! {
        #[test]
        fn stratified_is_proportional_subset(m in 1usize..=10, seed in any::<u64>()) {
            let d = sixty_forty();
            let s = stratified_subsample(&d, m, seed).unwrap();
            prop_assert_eq!(&s, &stratified_subsample(&d, m, seed).unwrap());
            prop_assert_eq!(s.len(), m);
            let ones = s.y.iter().filter(|&&l| l == 1).count() as f64;
            prop_assert!((ones - 0.6 * m as f64).abs() <= 1.0);
            let mut xs: Vec<f64> = s.x.as_slice().to_vec();
            xs.dedup();
            prop_assert_eq!(xs.len(), m);
            for (row, &l) in s.x.rows().zip(&s.y) {
                prop_assert_eq!(d.y[row[0] as usize], l);
            }
        }

        #[test]
        fn seeds_differ_by_component(a in any::<u64>(), b in any::<u64>()) {
            prop_assume!(a != b);
            prop_assert_ne!(derive_seed(&[a, 1]), derive_seed(&[b, 1]));
            prop_assert_ne!(derive_seed(&[a, b]), derive_seed(&[b, a]));
        }
    }

    #[test]
    fn distortions() {
        let id = gen_miscalibrated_scores(200, Distortion::Temperature(1.0), 4).unwrap();
        let aff = gen_miscalibrated_scores(200, Distortion::Affine(1.0, 0.0), 4).unwrap();
        assert_eq!(id.scores, aff.scores);
        let d = gen_toy(200, 4).unwrap();
        for (s, row) in id.scores.iter().zip(d.x.rows()) {
            assert_eq!(*s, bayes_logit(row));
        }
        assert!(gen_miscalibrated_scores(10, Distortion::Temperature(0.0), 1).is_err());
        assert_eq!(
            "temperature:0.5".parse::<Distortion>().unwrap(),
            Distortion::Temperature(0.5)
        );
        assert_eq!(
            "affine:2:-1".parse::<Distortion>().unwrap(),
            Distortion::Affine(2.0, -1.0)
        );
        assert!("affine:2".parse::<Distortion>().is_err());
    }

    #[test]
    fn overconfident_scores_are_worse_calibrated() {
        let sm = |t: f64| {
            let s = gen_miscalibrated_scores(5000, Distortion::Temperature(t), 8).unwrap();
            let p = s.to_prediction_set(Space::Logit).unwrap().to_probability();
            smooth_ce(&p).unwrap().0
        };
        assert!(sm(0.5) > sm(1.0));
    }
}
