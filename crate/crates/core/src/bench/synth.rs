use rand_distr::{Distribution, Normal};

use crate::matrix::Matrix;
use crate::seeded_rng;
use crate::tabular::Dataset;

const MAJORITY_CENTER: f64 = 0.35;
const SPREAD: f64 = 0.1;

/// Two isotropic Gaussians clipped to `[0, 1]`: majority (label 0) centered
/// at 0.35 in every feature, minority (label 1) shifted by `separation`.
/// Majority rows come first.
///
/// # Panics
///
/// If either count or `n_features` is zero.
pub fn synth_dataset(
    n_minority: usize,
    n_majority: usize,
    n_features: usize,
    separation: f64,
    seed: u64,
) -> Dataset {
    assert!(n_minority > 0 && n_majority > 0, "class counts must be positive");
    assert!(n_features > 0, "need at least one feature");
    let mut rng = seeded_rng(seed);
    let n = n_minority + n_majority;
    let mut data = Vec::with_capacity(n * n_features);
    let mut labels = Vec::with_capacity(n);
    for (label, count, center) in [
        (0u8, n_majority, MAJORITY_CENTER),
        (1u8, n_minority, MAJORITY_CENTER + separation),
    ] {
        let dist = Normal::new(center, SPREAD).expect("positive spread");
        for _ in 0..count {
            data.extend((0..n_features).map(|_| dist.sample(&mut rng).clamp(0.0, 1.0)));
            labels.push(label);
        }
    }
    Dataset::unnamed(Matrix::from_vec(n, n_features, data), labels).expect("valid synthetic data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::imbalance_stats;

    #[test]
    fn counts_and_ratio() {
        let d = synth_dataset(100, 400, 3, 0.2, 1);
        let s = imbalance_stats(&d);
        assert_eq!((s.n_minority, s.n_majority, s.minority_label), (100, 400, 1));
        assert_eq!(s.ratio, 4.0);
        assert!(d.features().as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn class_means_follow_separation() {
        let d = synth_dataset(2000, 2000, 2, 0.3, 7);
        for (label, expected) in [(0u8, 0.35), (1u8, 0.65)] {
            let rows = d.indices_of(label);
            let mean = rows.iter().map(|&i| d.row(i)[1]).sum::<f64>() / rows.len() as f64;
            assert!((mean - expected).abs() < 0.01, "{mean}");
        }
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(synth_dataset(5, 9, 2, 0.1, 3), synth_dataset(5, 9, 2, 0.1, 3));
    }
}
