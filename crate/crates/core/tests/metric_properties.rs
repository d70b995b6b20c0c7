//! Property tests for the metric panel on arbitrary prediction sets.

use proptest::prelude::*;

use smcal::metrics::{
    binned_ece, dual_smooth_ce, evaluate, mmce, pgap_logistic, pgap_sq, smooth_ce, witness_oracle,
    MetricOptions, PredictionSet,
};
use smcal::KernelFamily;

fn prob_set(max: usize) -> impl Strategy<Value = PredictionSet> {
    prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..max).prop_map(|v| {
        let (p, y): (Vec<f64>, Vec<bool>) = v.into_iter().unzip();
        PredictionSet::probabilities(p, y.into_iter().map(u8::from).collect()).unwrap()
    })
}

fn logit_set(max: usize) -> impl Strategy<Value = PredictionSet> {
    prop::collection::vec((-8.0f64..8.0, any::<bool>()), 1..max).prop_map(|v| {
        let (g, y): (Vec<f64>, Vec<bool>) = v.into_iter().unzip();
        PredictionSet::logits(g, y.into_iter().map(u8::from).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smooth_ce_matches_oracle(p in prob_set(10)) {
        let exact = smooth_ce(&p).unwrap().0;
        let oracle = witness_oracle(&p, 1.0, 1.0, 1e-3).unwrap();
        prop_assert!((exact - oracle).abs() <= 2e-3, "{} vs {}", exact, oracle);
    }

    #[test]
    fn witness_is_feasible_and_attains_value(p in prob_set(60)) {
        let (value, w) = smooth_ce(&p).unwrap();
        prop_assert!(w.witness.iter().all(|h| h.abs() <= 1.0 + 1e-12));
        for i in 1..w.values.len() {
            let slope = (w.witness[i] - w.witness[i - 1]).abs() / (w.values[i] - w.values[i - 1]);
            prop_assert!(slope <= 1.0 + 1e-9);
        }
        let attained: f64 = w.weights.iter().zip(&w.witness).map(|(m, h)| m * h).sum();
        prop_assert!((attained - value).abs() <= 1e-12);
    }

    #[test]
    fn squared_gap_sandwich(p in prob_set(80)) {
        let s = smooth_ce(&p).unwrap().0;
        let g = pgap_sq(&p).unwrap();
        prop_assert!(s * s <= g + 1e-9 && g <= 2.0 * s + 1e-9);
    }

    #[test]
    fn logistic_gap_sandwich_and_ordering(g in logit_set(80)) {
        let d = dual_smooth_ce(&g).unwrap().0;
        let gap = pgap_logistic(&g).unwrap();
        prop_assert!(2.0 * d * d <= gap + 1e-6 && gap <= 4.0 * d + 1e-6);
        prop_assert!(smooth_ce(&g.to_probability()).unwrap().0 <= d + 1e-12);
    }

    #[test]
    fn metrics_are_bounded(p in prob_set(80)) {
        let r = evaluate(&p, &MetricOptions::default()).unwrap();
        prop_assert!(r.validate().is_ok());
        prop_assert!((0.0..=1.0).contains(&r.smce));
        prop_assert!((0.0..=1.0).contains(&r.binned_ece));
        prop_assert!(r.mmce >= 0.0);
    }

    #[test]
    fn invariant_under_permutation(p in prob_set(40), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let q = PredictionSet::probabilities(
            idx.iter().map(|&i| p.values()[i]).collect(),
            idx.iter().map(|&i| p.labels()[i]).collect(),
        ).unwrap();
        prop_assert_eq!(smooth_ce(&p).unwrap().0, smooth_ce(&q).unwrap().0);
        prop_assert_eq!(pgap_sq(&p).unwrap(), pgap_sq(&q).unwrap());
        let (a, b) = (mmce(&p, KernelFamily::Laplace, None).unwrap(), mmce(&q, KernelFamily::Laplace, None).unwrap());
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn label_equal_predictions_are_perfect() {
    let y = vec![1, 0, 0, 1, 1];
    let p = PredictionSet::probabilities(y.iter().map(|&l| f64::from(l)).collect(), y).unwrap();
    assert_eq!(smooth_ce(&p).unwrap().0, 0.0);
    assert_eq!(pgap_sq(&p).unwrap(), 0.0);
    assert_eq!(binned_ece(&p, Some(3)).unwrap().0, 0.0);
    assert_eq!(mmce(&p, KernelFamily::Gaussian, None).unwrap(), 0.0);
}
