//! Dataset ingestion, min-max scaling, stratified splitting and class counts.
//!
//! Labels are always stored as `0`/`1` with the rarer class mapped to `1`,
//! so downstream code can treat class `1` as the positive (minority) class.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::matrix::Matrix;
use crate::seeded_rng;

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("file not found: {0}")]
    MissingFile(String),
    #[error("label column `{0}` not present in header")]
    MissingColumn(String),
    #[error("cell at row {row}, column `{column}` is not a finite number: `{value}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("label column must hold exactly two distinct values, found {0}")]
    NonBinaryLabels(usize),
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("feature matrix has {matrix} rows but {labels} labels")]
    LengthMismatch { matrix: usize, labels: usize },
    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("both classes must be present")]
    SingleClass,
    #[error("class {class} has {count} rows; at least 2 are required")]
    TooFewRows { class: u8, count: usize },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TabularError> = std::result::Result<T, E>;

/// Numeric feature table with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Validates and wraps a feature matrix with its labels.
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(TabularError::EmptyDataset);
        }
        if features.cols() == 0 {
            return Err(TabularError::NoFeatures);
        }
        if features.rows() != labels.len() {
            return Err(TabularError::LengthMismatch {
                matrix: features.rows(),
                labels: labels.len(),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(TabularError::DimensionMismatch {
                expected: features.cols(),
                actual: feature_names.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(TabularError::InvalidLabel(bad));
        }
        for (r, row) in features.iter_rows().enumerate() {
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(TabularError::NonFinite { row: r, col: c });
            }
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    /// Like [`Dataset::new`] with generated names `x0, x1, ...`.
    pub fn unnamed(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let names = (0..features.cols()).map(|j| format!("x{j}")).collect();
        Self::new(features, labels, names)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Row indices carrying `label`, ascending.
    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Appends rows that all carry `label`.
    pub fn append_rows(&self, rows: &Matrix, label: u8) -> Result<Dataset> {
        if rows.cols() != self.n_features() {
            return Err(TabularError::DimensionMismatch {
                expected: self.n_features(),
                actual: rows.cols(),
            });
        }
        let mut labels = self.labels.clone();
        labels.extend(std::iter::repeat_n(label, rows.rows()));
        Dataset::new(
            self.features.vstack(rows),
            labels,
            self.feature_names.clone(),
        )
    }

    /// Writes the dataset as CSV with `label_column` last, plus optional
    /// extra string columns (e.g. provenance).
    pub fn write_csv<W: Write>(
        &self,
        writer: W,
        label_column: &str,
        extra: Option<(&str, &[&str])>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        if let Some((name, _)) = extra {
            header.push(name);
        }
        w.write_record(&header)?;
        for (i, row) in self.features.iter_rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.labels[i].to_string());
            if let Some((_, values)) = extra {
                rec.push(values[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// How raw label values were mapped onto `{0, 1}` during ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    /// Raw value mapped to `1` (the rarer class).
    pub positive: String,
    /// Raw value mapped to `0`.
    pub negative: String,
    pub positive_count: usize,
    pub negative_count: usize,
}

/// Reads a headered CSV, selecting the label column by name.
///
/// The rarer label value becomes `1`. On equal counts the lexicographically
/// larger value becomes `1`.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<(Dataset, LabelMapping)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(TabularError::MissingFile(path.display().to_string()));
    }
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, label_column: &str) -> Result<(Dataset, LabelMapping)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| TabularError::MissingColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(TabularError::NoFeatures);
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (col, cell) in rec.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| TabularError::NonNumericCell {
                    row,
                    column: header[col].clone(),
                    value: cell.to_string(),
                })?;
            values.push(v);
        }
    }
    if raw_labels.is_empty() {
        return Err(TabularError::EmptyDataset);
    }

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &raw_labels {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    if counts.len() != 2 {
        return Err(TabularError::NonBinaryLabels(counts.len()));
    }
    let mut classes: Vec<(&str, usize)> = counts.into_iter().collect();
    // rarer first; on ties the larger value is treated as the positive class
    classes.sort_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)));
    let mapping = LabelMapping {
        positive: classes[0].0.to_string(),
        negative: classes[1].0.to_string(),
        positive_count: classes[0].1,
        negative_count: classes[1].1,
    };
    let labels = raw_labels
        .iter()
        .map(|l| u8::from(*l == mapping.positive))
        .collect::<Vec<_>>();
    let features = Matrix::from_vec(labels.len(), feature_names.len(), values);
    Ok((Dataset::new(features, labels, feature_names)?, mapping))
}

/// Per-feature minimum and maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerParams {
    pub fn fit(d: &Dataset) -> Self {
        let x = d.features();
        let mut min = x.row(0).to_vec();
        let mut max = min.clone();
        for row in x.iter_rows().skip(1) {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    /// Maps each feature to `(x - min) / (max - min)`; constant features map to 0.
    /// Values outside the fitted range are not clamped.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        let scaled = self.transform_matrix(d.features())?;
        Dataset::new(scaled, d.labels().to_vec(), d.feature_names().to_vec())
    }

    pub fn transform_matrix(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.min.len() {
            return Err(TabularError::DimensionMismatch {
                expected: self.min.len(),
                actual: x.cols(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                let range = self.max[j] - self.min[j];
                *v = if range > 0.0 {
                    (*v - self.min[j]) / range
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }

    /// Maps scaled values back to the original units. Constant features
    /// return their fitted value.
    pub fn inverse_matrix(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.min.len() {
            return Err(TabularError::DimensionMismatch {
                expected: self.min.len(),
                actual: x.cols(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.min[j] + *v * (self.max[j] - self.min[j]);
            }
        }
        Ok(out)
    }
}

pub fn minmax_fit(d: &Dataset) -> ScalerParams {
    ScalerParams::fit(d)
}

pub fn minmax_transform(p: &ScalerParams, d: &Dataset) -> Result<Dataset> {
    p.transform(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestSplit {
    pub train: Dataset,
    pub test: Dataset,
    /// Source row indices of `train`, ascending.
    pub train_indices: Vec<usize>,
    /// Source row indices of `test`, ascending.
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Number of rows of a class that go to the training side.
///
/// Round-half-up of `count · (1 − test_fraction)`, kept within `[1, count − 1]`
/// so both sides see every class.
pub fn train_count(count: usize, test_fraction: f64) -> usize {
    let raw = (count as f64 * (1.0 - test_fraction) + 0.5).floor() as usize;
    raw.clamp(1, count.saturating_sub(1).max(1))
}

/// Shuffles each class independently and sends the first
/// [`train_count`] rows of each to the training side.
pub fn stratified_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<TrainTestSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(TabularError::InvalidFraction(test_fraction));
    }
    let mut rng = seeded_rng(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    let per_class = [d.indices_of(0), d.indices_of(1)];
    if per_class.iter().any(Vec::is_empty) {
        return Err(TabularError::SingleClass);
    }
    for (class, mut idx) in per_class.into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(TabularError::TooFewRows {
                class: class as u8,
                count: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        let n_train = train_count(idx.len(), test_fraction);
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(TrainTestSplit {
        train: d.select(&train_idx),
        test: d.select(&test_idx),
        train_indices: train_idx,
        test_indices: test_idx,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImbalanceStats {
    pub n_minority: usize,
    pub n_majority: usize,
    /// `n_majority / n_minority`; infinite when only one class is present.
    pub ratio: f64,
    pub minority_label: u8,
}

impl ImbalanceStats {
    pub fn is_single_class(&self) -> bool {
        self.n_minority == 0
    }

    pub fn majority_label(&self) -> u8 {
        1 - self.minority_label
    }

    /// Rows needed to bring the minority class level with the majority.
    pub fn deficit(&self) -> usize {
        self.n_majority - self.n_minority
    }
}

/// Class counts. On a tie, class `1` is reported as the minority.
pub fn imbalance_stats(d: &Dataset) -> ImbalanceStats {
    let ones = d.labels().iter().filter(|&&l| l == 1).count();
    let zeros = d.n_rows() - ones;
    let (n_minority, n_majority, minority_label) = if ones <= zeros {
        (ones, zeros, 1)
    } else {
        (zeros, ones, 0)
    };
    let ratio = if n_minority == 0 {
        f64::INFINITY
    } else {
        n_majority as f64 / n_minority as f64
    };
    ImbalanceStats {
        n_minority,
        n_majority,
        ratio,
        minority_label,
    }
}

/// Keeps every minority row and the first `n_majority` majority rows of a
/// seeded shuffle, preserving source order in the output.
pub fn subsample_majority(d: &Dataset, n_majority: usize, seed: u64) -> Dataset {
    let stats = imbalance_stats(d);
    let mut majority = d.indices_of(stats.majority_label());
    majority.shuffle(&mut seeded_rng(seed));
    majority.truncate(n_majority);
    let mut keep = d.indices_of(stats.minority_label);
    keep.extend(majority);
    keep.sort_unstable();
    d.select(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_dataset(values: &[f64], labels: &[u8]) -> Dataset {
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        Dataset::unnamed(Matrix::from_rows(&rows), labels.to_vec()).unwrap()
    }

    #[test]
    fn header_only_csv_is_empty() {
        let err = read_csv("a,b,y\n".as_bytes(), "y").unwrap_err();
        assert!(matches!(err, TabularError::EmptyDataset));
    }

    #[test]
    fn three_row_fixture_maps_rarer_label_to_one() {
        let csv = "a,b,y\n1.0,2.0,no\n3.0,4.0,yes\n5.0,6.0,no\n";
        let (d, map) = read_csv(csv.as_bytes(), "y").unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.feature_names(), &["a", "b"]);
        assert_eq!(map.positive, "yes");
        assert_eq!(map.negative, "no");
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn label_column_can_sit_anywhere() {
        let csv = "y,a\nb,1\na,2\nb,3\n";
        let (d, map) = read_csv(csv.as_bytes(), "y").unwrap();
        assert_eq!(map.positive, "a");
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.features().column(0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn ingestion_errors() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes(), "y"),
            Err(TabularError::MissingColumn(_))
        ));
        assert!(matches!(
            read_csv("a,y\n1,p\nfoo,q\n".as_bytes(), "y"),
            Err(TabularError::NonNumericCell { row: 1, .. })
        ));
        assert!(matches!(
            read_csv("a,y\n1,p\nNaN,q\n".as_bytes(), "y"),
            Err(TabularError::NonNumericCell { .. })
        ));
        assert!(matches!(
            read_csv("a,y\n1,p\n2,q\n3,r\n".as_bytes(), "y"),
            Err(TabularError::NonBinaryLabels(3))
        ));
        assert!(matches!(
            read_csv("a,y\n1,p\n2,p\n".as_bytes(), "y"),
            Err(TabularError::NonBinaryLabels(1))
        ));
        assert!(matches!(
            load_csv("/definitely/not/here.csv", "y"),
            Err(TabularError::MissingFile(_))
        ));
    }

    #[test]
    fn minmax_on_single_row_is_degenerate() {
        let d = Dataset::unnamed(Matrix::from_rows(&[[3.0, -1.0]]), vec![1]).unwrap();
        let p = minmax_fit(&d);
        assert_eq!(p.min, vec![3.0, -1.0]);
        assert_eq!(p.max, vec![3.0, -1.0]);
    }

    #[test]
    fn minmax_hand_values() {
        let d = column_dataset(&[2.0, 4.0, 6.0], &[0, 1, 0]);
        let p = minmax_fit(&d);
        assert_eq!((p.min[0], p.max[0]), (2.0, 6.0));
        let t = minmax_transform(&p, &d).unwrap();
        assert_eq!(t.features().column(0), vec![0.0, 0.5, 1.0]);

        let out_of_range = column_dataset(&[8.0], &[1]);
        let t = p.transform(&out_of_range).unwrap();
        assert_eq!(t.row(0), &[1.5]);

        let constant = column_dataset(&[5.0, 5.0, 5.0], &[0, 1, 0]);
        let t = minmax_fit(&constant).transform(&constant).unwrap();
        assert_eq!(t.features().column(0), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn transform_checks_width() {
        let p = ScalerParams {
            min: vec![0.0, 0.0],
            max: vec![1.0, 1.0],
        };
        let d = column_dataset(&[1.0], &[1]);
        assert!(matches!(
            p.transform(&d),
            Err(TabularError::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn inverse_undoes_transform() {
        let d = column_dataset(&[2.0, 4.0, 7.0], &[0, 1, 0]);
        let p = minmax_fit(&d);
        let back = p.inverse_matrix(&p.transform_matrix(d.features()).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(d.features().as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn split_errors() {
        let single = column_dataset(&[1.0, 2.0, 3.0], &[0, 0, 0]);
        assert!(matches!(
            stratified_split(&single, 0.2, 1),
            Err(TabularError::SingleClass)
        ));
        let tiny = column_dataset(&[1.0, 2.0, 3.0], &[0, 0, 1]);
        assert!(matches!(
            stratified_split(&tiny, 0.2, 1),
            Err(TabularError::TooFewRows { class: 1, count: 1 })
        ));
        let ok = column_dataset(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert!(matches!(
            stratified_split(&ok, 1.0, 1),
            Err(TabularError::InvalidFraction(_))
        ));
    }

    #[test]
    fn ten_row_split_counts_by_enumeration() {
        // 4 positives, 6 negatives
        let labels = [1, 0, 0, 1, 0, 0, 1, 0, 1, 0];
        let values: Vec<f64> = (0..10).map(f64::from).collect();
        let d = column_dataset(&values, &labels);
        for seed in 0..20 {
            let s = stratified_split(&d, 0.3, seed).unwrap();
            let count = |ds: &Dataset, c: u8| ds.labels().iter().filter(|&&l| l == c).count();
            // round(4·0.7)=3, round(6·0.7)=4
            assert_eq!(count(&s.train, 1), 3);
            assert_eq!(count(&s.train, 0), 4);
            assert_eq!(count(&s.test, 1), 1);
            assert_eq!(count(&s.test, 0), 2);
            let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn train_count_rounds_half_up() {
        assert_eq!(train_count(268, 0.2), 214);
        assert_eq!(train_count(500, 0.2), 400);
        // 5 · 0.5 = 2.5 → 3
        assert_eq!(train_count(5, 0.5), 3);
        // clamped so the test side keeps a row
        assert_eq!(train_count(2, 0.2), 1);
    }

    #[test]
    fn imbalance_counts() {
        let mut labels = vec![1u8; 3];
        labels.extend(vec![0u8; 9]);
        let values: Vec<f64> = (0..12).map(f64::from).collect();
        let s = imbalance_stats(&column_dataset(&values, &labels));
        assert_eq!((s.n_minority, s.n_majority, s.minority_label), (3, 9, 1));
        assert_eq!(s.ratio, 3.0);

        let balanced = column_dataset(&[0.0, 1.0], &[0, 1]);
        assert_eq!(imbalance_stats(&balanced).ratio, 1.0);

        let mut labels = vec![1u8; 492];
        labels.extend(vec![0u8; 2000]);
        let values = vec![0.0; labels.len()];
        let s = imbalance_stats(&column_dataset(&values, &labels));
        assert!((s.ratio - 4.07).abs() < 0.005);

        let single = imbalance_stats(&column_dataset(&[0.0, 1.0], &[0, 0]));
        assert!(single.is_single_class());
        assert!(single.ratio.is_infinite());
    }

    #[test]
    fn majority_subsample_keeps_all_minority() {
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 5 == 0)).collect();
        let values: Vec<f64> = (0..30).map(f64::from).collect();
        let d = column_dataset(&values, &labels);
        let s = subsample_majority(&d, 10, 0);
        let st = imbalance_stats(&s);
        assert_eq!((st.n_minority, st.n_majority), (6, 10));
        assert_eq!(s, subsample_majority(&d, 10, 0));
    }
}
