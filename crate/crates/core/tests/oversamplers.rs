mod common;

use common::{adasyn_counts_oracle, brute_knn, random_dataset, rows_of, segment_distance};
use imbench::oversample::{
    adasyn, adasyn_plan, borderline_danger_set, borderline_smote, random_oversample, smote,
    AugmentedDataset, Provenance,
};
use imbench::tabular::{imbalance_stats, Dataset};
use proptest::prelude::*;

const K: usize = 5;

fn fixture() -> impl Strategy<Value = (Dataset, u64)> {
    (any::<u64>(), 3usize..15, 16usize..40, 1usize..4, any::<u64>())
        .prop_map(|(s, n_min, n_maj, d, seed)| (random_dataset(s, n_min, n_maj, d), seed))
}

/// Every synthetic row sits on the segment from its source to a neighbor
/// drawn from the source's k nearest minority rows.
fn check_geometry(input: &Dataset, out: &AugmentedDataset) -> Result<(), TestCaseError> {
    let minority: Vec<usize> = input.indices_of(1);
    let min_rows: Vec<Vec<f64>> = minority.iter().map(|&i| input.row(i).to_vec()).collect();
    let k = K.min(minority.len() - 1);
    let synth = out.synthetic_rows();
    prop_assert_eq!(out.records.len(), synth.rows());
    for (r, rec) in out.records.iter().enumerate() {
        let nb = rec.neighbor.expect("interpolating samplers log a neighbor");
        let src_pos = minority.iter().position(|&m| m == rec.source).expect("source is minority");
        let allowed: Vec<usize> = brute_knn(&min_rows, src_pos, k).into_iter().map(|p| minority[p]).collect();
        prop_assert!(allowed.contains(&nb), "neighbor {nb} not among {allowed:?}");
        prop_assert!((0.0..=1.0).contains(&rec.gap));
        let p = synth.row(r);
        prop_assert!(segment_distance(p, input.row(rec.source), input.row(nb)) < 1e-12);
        for (j, &v) in p.iter().enumerate() {
            let (a, b) = (input.row(rec.source)[j], input.row(nb)[j]);
            prop_assert!((v - (a + rec.gap * (b - a))).abs() < 1e-12);
        }
    }
    Ok(())
}

fn check_parity(input: &Dataset, out: &AugmentedDataset) -> Result<(), TestCaseError> {
    let s = imbalance_stats(&out.dataset);
    prop_assert_eq!(s.n_minority, s.n_majority);
    prop_assert_eq!(out.n_real(), input.n_rows());
    prop_assert_eq!(out.dataset.select(&(0..input.n_rows()).collect::<Vec<_>>()), input.clone());
    prop_assert!(out.provenance[input.n_rows()..].iter().all(|&p| p == Provenance::Synthetic));
    let synth_labels = &out.dataset.labels()[input.n_rows()..];
    prop_assert!(synth_labels.iter().all(|&l| l == 1));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn smote_geometry_and_parity((d, seed) in fixture()) {
        let out = smote(&d, K, seed).unwrap();
        check_parity(&d, &out)?;
        check_geometry(&d, &out)?;
        prop_assert_eq!(out, smote(&d, K, seed).unwrap());
    }

    #[test]
    fn borderline_geometry_and_parity((d, seed) in fixture()) {
        let out = borderline_smote(&d, K, 5, seed).unwrap();
        check_parity(&d, &out)?;
        check_geometry(&d, &out)?;
        let danger = borderline_danger_set(&d, 5).unwrap();
        if !danger.is_empty() {
            prop_assert!(out.records.iter().all(|r| danger.contains(&r.source)));
        } else {
            prop_assert!(out.fallback.is_some());
        }
    }

    #[test]
    fn adasyn_counts_match_brute_force_oracle((d, seed) in fixture()) {
        let out = adasyn(&d, K, seed).unwrap();
        check_parity(&d, &out)?;
        check_geometry(&d, &out)?;
        match adasyn_counts_oracle(&d, K) {
            Some(expected) => {
                let plan = adasyn_plan(&d, K).unwrap();
                prop_assert_eq!(&plan.counts, &expected);
                let minority = d.indices_of(1);
                for (pos, &row) in minority.iter().enumerate() {
                    let made = out.records.iter().filter(|r| r.source == row).count();
                    prop_assert_eq!(made, expected[pos]);
                }
            }
            None => prop_assert!(out.fallback.is_some()),
        }
    }

    #[test]
    fn ros_duplicates_minority_rows((d, seed) in fixture()) {
        let out = random_oversample(&d, seed).unwrap();
        check_parity(&d, &out)?;
        let minority: Vec<Vec<f64>> = d.indices_of(1).iter().map(|&i| d.row(i).to_vec()).collect();
        for row in out.synthetic_rows().iter_rows() {
            prop_assert!(minority.iter().any(|m| m.as_slice() == row));
        }
    }
}

#[test]
fn danger_set_matches_brute_force_on_fixed_fixture() {
    let d = random_dataset(42, 12, 30, 2);
    let rows = rows_of(&d);
    let expected: Vec<usize> = d
        .indices_of(1)
        .into_iter()
        .filter(|&i| {
            let maj = brute_knn(&rows, i, 5).into_iter().filter(|&j| d.labels()[j] == 0).count();
            2 * maj >= 5 && maj < 5
        })
        .collect();
    assert_eq!(borderline_danger_set(&d, 5).unwrap(), expected);
}
