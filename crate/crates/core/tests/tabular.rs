use std::path::PathBuf;

use imbench::matrix::Matrix;
use imbench::tabular::{
    imbalance_stats, load_csv, read_csv, stratified_split, subsample_majority, train_count, Dataset,
    ScalerParams, TabularError,
};
use proptest::prelude::*;

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn labelled(labels: &[u8]) -> Dataset {
    let rows: Vec<[f64; 2]> = (0..labels.len()).map(|i| [i as f64, (i * 7 % 5) as f64]).collect();
    Dataset::unnamed(Matrix::from_rows(&rows), labels.to_vec()).unwrap()
}

fn labels_strategy() -> impl Strategy<Value = Vec<u8>> {
    (2usize..40, 2usize..80).prop_flat_map(|(ones, zeros)| {
        let mut v = vec![1u8; ones];
        v.extend(vec![0u8; zeros]);
        Just(v).prop_shuffle()
    })
}

proptest! {
    #[test]
    fn split_is_a_stratified_partition(
        labels in labels_strategy(),
        frac in 0.05f64..0.6,
        seed in any::<u64>(),
    ) {
        let d = labelled(&labels);
        let s = stratified_split(&d, frac, seed).unwrap();
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for class in [0u8, 1] {
            let total = labels.iter().filter(|&&l| l == class).count();
            let in_train = s.train_indices.iter().filter(|&&i| labels[i] == class).count();
            prop_assert_eq!(in_train, train_count(total, frac));
            prop_assert!(in_train >= 1 && in_train < total);
        }
        prop_assert_eq!(s.train.n_rows(), s.train_indices.len());
        for (k, &i) in s.test_indices.iter().enumerate() {
            prop_assert_eq!(s.test.row(k), d.row(i));
            prop_assert_eq!(s.test.labels()[k], labels[i]);
        }
        prop_assert_eq!(stratified_split(&d, frac, seed).unwrap().train_indices, s.train_indices);
    }

    #[test]
    fn scaler_maps_fit_rows_into_unit_range(
        rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..30),
    ) {
        let labels: Vec<u8> = (0..rows.len()).map(|i| u8::from(i % 2 == 0)).collect();
        let d = Dataset::unnamed(Matrix::from_rows(&rows), labels).unwrap();
        let p = ScalerParams::fit(&d);
        let t = p.transform(&d).unwrap();
        for c in 0..3 {
            let col = t.features().column(c);
            prop_assert!(col.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
            if p.max[c] > p.min[c] {
                prop_assert!(col.iter().any(|&v| v == 0.0));
                prop_assert!(col.iter().any(|&v| (v - 1.0).abs() < 1e-12));
            }
        }
        let back = p.inverse_matrix(t.features()).unwrap();
        for (a, b) in back.as_slice().iter().zip(d.features().as_slice()) {
            let constant = p.max.iter().zip(&p.min).any(|(hi, lo)| hi == lo);
            if !constant {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }
}

#[test]
fn pima_loads_with_diabetic_as_minority() {
    let (d, m) = load_csv(data_path("pima.csv"), "Outcome").unwrap();
    assert_eq!((d.n_rows(), d.n_features()), (768, 8));
    assert_eq!((m.positive.as_str(), m.positive_count), ("1", 268));
    let s = imbalance_stats(&d);
    assert_eq!((s.n_minority, s.n_majority), (268, 500));
    assert!((s.ratio - 1.87).abs() < 0.01);
}

#[test]
fn breast_cancer_loads_with_malignant_as_minority() {
    let (d, m) = load_csv(data_path("breast_cancer.csv"), "diagnosis").unwrap();
    assert_eq!((d.n_rows(), d.n_features()), (569, 30));
    assert_eq!(m.positive, "malignant");
    assert_eq!(imbalance_stats(&d).n_minority, 212);
}

#[test]
fn loader_errors() {
    assert!(matches!(
        load_csv(data_path("missing.csv"), "y"),
        Err(TabularError::MissingFile(_))
    ));
    let text = "a,b,y\n1,2,0\n3,4,1\n";
    assert!(matches!(read_csv(text.as_bytes(), "z"), Err(TabularError::MissingColumn(_))));
    let text = "a,b,y\n1,2,0\n3,x,1\n";
    assert!(matches!(
        read_csv(text.as_bytes(), "y"),
        Err(TabularError::NonNumericCell { row: 1, .. })
    ));
    let text = "a,y\n1,0\n2,1\n3,2\n";
    assert!(matches!(read_csv(text.as_bytes(), "y"), Err(TabularError::NonBinaryLabels(3))));
}

#[test]
fn majority_subsample_keeps_every_minority_row() {
    let mut labels = vec![1u8; 10];
    labels.extend(vec![0u8; 90]);
    let d = labelled(&labels);
    let s = subsample_majority(&d, 40, 0);
    let stats = imbalance_stats(&s);
    assert_eq!((stats.n_minority, stats.n_majority), (10, 40));
    assert_eq!(s, subsample_majority(&d, 40, 0));
}
