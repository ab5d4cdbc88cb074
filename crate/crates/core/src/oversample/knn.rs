use crate::matrix::Matrix;

use super::{OversampleError, Result};

/// Exhaustive Euclidean nearest-neighbor index over a reference matrix.
///
/// Results are ordered by distance; equal distances are broken by the lower
/// row index.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    reference: Matrix,
}

impl KnnIndex {
    pub fn new(reference: Matrix) -> Self {
        Self { reference }
    }

    pub fn reference(&self) -> &Matrix {
        &self.reference
    }

    pub fn len(&self) -> usize {
        self.reference.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.rows() == 0
    }

    /// The `k` nearest reference rows to `point`, skipping row `exclude` if given.
    pub fn query(&self, point: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<usize>> {
        let available = self.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        if k == 0 || k > available {
            return Err(OversampleError::KTooLarge { k, available });
        }
        let mut dists: Vec<(f64, usize)> = self
            .reference
            .iter_rows()
            .enumerate()
            .filter(|&(i, _)| Some(i) != exclude)
            .map(|(i, row)| (squared_distance(point, row), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, cmp);
            dists.truncate(k);
        }
        dists.sort_unstable_by(cmp);
        Ok(dists.into_iter().map(|(_, i)| i).collect())
    }

    /// Neighbors of reference row `row`, excluding the row itself.
    pub fn query_row(&self, row: usize, k: usize) -> Result<Vec<usize>> {
        self.query(self.reference.row(row), k, Some(row))
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
