//! Non-GAN oversamplers: random oversampling, SMOTE, Borderline-SMOTE and ADASYN.
//!
//! Every sampler balances the minority class to exact parity with the
//! majority class. Real rows pass through unchanged and come first; synthetic
//! rows are appended, each with a [`SynthesisRecord`] naming the source row
//! (and the neighbor it was interpolated toward) so generation can be audited.

mod knn;

pub use knn::{squared_distance, KnnIndex};

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng as _;
use thiserror::Error;

use crate::matrix::Matrix;
use crate::tabular::{imbalance_stats, Dataset, ImbalanceStats, TabularError};
use crate::{seeded_rng, Rng};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_M: usize = 5;

#[derive(Debug, Error)]
pub enum OversampleError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("minority class has {0} rows; at least 2 are required")]
    MinorityTooSmall(usize),
    #[error("k = {k} exceeds the {available} available reference rows")]
    KTooLarge { k: usize, available: usize },
    #[error("no minority row has a majority neighbor")]
    AllZeroDensity,
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

pub type Result<T, E = OversampleError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Real,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Synthetic => "synthetic",
        }
    }
}

/// How one synthetic row was produced: `source + gap · (neighbor − source)`.
/// Row indices refer to the sampler's input dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisRecord {
    pub source: usize,
    pub neighbor: Option<usize>,
    pub gap: f64,
}

/// Why a sampler fell back to plain SMOTE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    NoDangerRows,
    AllZeroDensity,
}

/// Input rows followed by synthetic minority rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDataset {
    pub dataset: Dataset,
    pub provenance: Vec<Provenance>,
    pub sampler: String,
    pub seed: u64,
    /// One entry per synthetic row, in order. Empty for generators that do
    /// not interpolate between rows.
    pub records: Vec<SynthesisRecord>,
    pub fallback: Option<Fallback>,
    pub warnings: Vec<String>,
}

impl AugmentedDataset {
    pub fn unchanged(input: &Dataset, sampler: &str, seed: u64) -> Self {
        Self {
            dataset: input.clone(),
            provenance: vec![Provenance::Real; input.n_rows()],
            sampler: sampler.to_string(),
            seed,
            records: Vec::new(),
            fallback: None,
            warnings: Vec::new(),
        }
    }

    /// Appends `rows` to `input` as synthetic rows carrying `label`.
    pub fn with_synthetic(
        input: &Dataset,
        rows: &Matrix,
        label: u8,
        sampler: &str,
        seed: u64,
    ) -> Result<Self> {
        let mut out = Self::unchanged(input, sampler, seed);
        out.dataset = input.append_rows(rows, label)?;
        out.provenance
            .extend(std::iter::repeat_n(Provenance::Synthetic, rows.rows()));
        Ok(out)
    }

    pub fn n_synthetic(&self) -> usize {
        self.provenance
            .iter()
            .filter(|&&p| p == Provenance::Synthetic)
            .count()
    }

    pub fn n_real(&self) -> usize {
        self.provenance.len() - self.n_synthetic()
    }

    /// The appended rows only.
    pub fn synthetic_rows(&self) -> Matrix {
        let idx: Vec<usize> = (self.n_real()..self.provenance.len()).collect();
        self.dataset.features().select_rows(&idx)
    }

    /// CSV export with a trailing `provenance` column.
    pub fn write_csv<W: std::io::Write>(&self, writer: W, label_column: &str) -> Result<()> {
        let tags: Vec<&str> = self.provenance.iter().map(|p| p.as_str()).collect();
        self.dataset
            .write_csv(writer, label_column, Some(("provenance", &tags)))?;
        Ok(())
    }

    fn warn(&mut self, msg: String) {
        warn!("{}: {msg}", self.sampler);
        self.warnings.push(msg);
    }
}

/// Per-minority-row synthesis counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisPlan {
    /// Minority row indices in the input, ascending.
    pub minority_rows: Vec<usize>,
    /// Fraction of majority rows among each minority row's neighbors.
    pub density: Vec<f64>,
    pub counts: Vec<usize>,
    pub total: usize,
}

/// Class counts, rejecting single-class input.
fn checked_stats(train: &Dataset) -> Result<ImbalanceStats> {
    let stats = imbalance_stats(train);
    if stats.is_single_class() {
        return Err(OversampleError::SingleClass);
    }
    Ok(stats)
}

/// Duplicates minority rows chosen uniformly with replacement until parity.
pub fn random_oversample(train: &Dataset, seed: u64) -> Result<AugmentedDataset> {
    const NAME: &str = "ros";
    let stats = checked_stats(train)?;
    if stats.deficit() == 0 {
        return Ok(AugmentedDataset::unchanged(train, NAME, seed));
    }
    let minority = train.indices_of(stats.minority_label);
    let mut rng = seeded_rng(seed);
    let picks: Vec<usize> = (0..stats.deficit())
        .map(|_| minority[rng.random_range(0..minority.len())])
        .collect();
    let rows = train.features().select_rows(&picks);
    let mut out = AugmentedDataset::with_synthetic(train, &rows, stats.minority_label, NAME, seed)?;
    out.records = picks
        .into_iter()
        .map(|source| SynthesisRecord {
            source,
            neighbor: None,
            gap: 0.0,
        })
        .collect();
    Ok(out)
}

/// Minority rows and, for each, its nearest minority neighbors (as
/// positions into the minority list). `k` is capped at `n_minority - 1`.
struct MinorityNeighbors {
    rows: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    k: usize,
}

fn minority_neighbors(
    train: &Dataset,
    stats: &ImbalanceStats,
    k: usize,
    warnings: &mut Vec<String>,
) -> Result<MinorityNeighbors> {
    let rows = train.indices_of(stats.minority_label);
    if rows.len() < 2 {
        return Err(OversampleError::MinorityTooSmall(rows.len()));
    }
    let k_eff = k.min(rows.len() - 1).max(1);
    if k_eff != k {
        warnings.push(format!(
            "k = {k} capped to {k_eff} for {} minority rows",
            rows.len()
        ));
    }
    let index = KnnIndex::new(train.features().select_rows(&rows));
    let neighbors = (0..rows.len())
        .map(|i| index.query_row(i, k_eff))
        .collect::<Result<Vec<_>>>()?;
    Ok(MinorityNeighbors {
        rows,
        neighbors,
        k: k_eff,
    })
}

/// Interpolates one synthetic row per entry of `schedule` (positions into
/// the minority list).
fn interpolate(
    train: &Dataset,
    mn: &MinorityNeighbors,
    schedule: &[usize],
    rng: &mut Rng,
) -> (Matrix, Vec<SynthesisRecord>) {
    let d = train.n_features();
    let mut data = Vec::with_capacity(schedule.len() * d);
    let mut records = Vec::with_capacity(schedule.len());
    for &pos in schedule {
        let nn_pos = mn.neighbors[pos][rng.random_range(0..mn.k)];
        let gap: f64 = rng.random();
        let source = mn.rows[pos];
        let neighbor = mn.rows[nn_pos];
        let x = train.row(source);
        let y = train.row(neighbor);
        data.extend(x.iter().zip(y).map(|(a, b)| a + gap * (b - a)));
        records.push(SynthesisRecord {
            source,
            neighbor: Some(neighbor),
            gap,
        });
    }
    (Matrix::from_vec(schedule.len(), d, data), records)
}

/// Visits `positions` in shuffled order, wrapping, for `total` draws, so
/// per-row counts differ by at most one.
fn cyclic_schedule(positions: &[usize], total: usize, rng: &mut Rng) -> Vec<usize> {
    let mut order = positions.to_vec();
    order.shuffle(rng);
    order.iter().copied().cycle().take(total).collect()
}

/// SMOTE: interpolation between minority rows and one of their `k` nearest
/// minority neighbors until parity.
pub fn smote(train: &Dataset, k: usize, seed: u64) -> Result<AugmentedDataset> {
    smote_named(train, k, seed, "smote")
}

fn smote_named(train: &Dataset, k: usize, seed: u64, name: &str) -> Result<AugmentedDataset> {
    let stats = checked_stats(train)?;
    let mut out = AugmentedDataset::unchanged(train, name, seed);
    if stats.deficit() == 0 {
        return Ok(out);
    }
    let mut notes = Vec::new();
    let mn = minority_neighbors(train, &stats, k, &mut notes)?;
    let mut rng = seeded_rng(seed);
    let positions: Vec<usize> = (0..mn.rows.len()).collect();
    let schedule = cyclic_schedule(&positions, stats.deficit(), &mut rng);
    let (rows, records) = interpolate(train, &mn, &schedule, &mut rng);
    finish(&mut out, train, &stats, rows, records, notes)?;
    Ok(out)
}

fn finish(
    out: &mut AugmentedDataset,
    train: &Dataset,
    stats: &ImbalanceStats,
    rows: Matrix,
    records: Vec<SynthesisRecord>,
    notes: Vec<String>,
) -> Result<()> {
    let aug = AugmentedDataset::with_synthetic(train, &rows, stats.minority_label, &out.sampler, out.seed)?;
    out.dataset = aug.dataset;
    out.provenance = aug.provenance;
    out.records = records;
    for n in notes {
        out.warn(n);
    }
    Ok(())
}

/// Minority rows whose `m` nearest neighbors over the whole set include at
/// least `m/2` but fewer than `m` majority rows. `m` is capped at `n - 1`.
pub fn borderline_danger_set(train: &Dataset, m: usize) -> Result<Vec<usize>> {
    let stats = checked_stats(train)?;
    let m_eff = m.min(train.n_rows() - 1);
    let index = KnnIndex::new(train.features().clone());
    let mut danger = Vec::new();
    for i in train.indices_of(stats.minority_label) {
        let majority = index
            .query_row(i, m_eff)?
            .into_iter()
            .filter(|&j| train.labels()[j] != stats.minority_label)
            .count();
        if 2 * majority >= m_eff && majority < m_eff {
            danger.push(i);
        }
    }
    Ok(danger)
}

/// Borderline-SMOTE (borderline-1): SMOTE seeded only from DANGER rows,
/// interpolating toward their `k` nearest minority neighbors. Falls back to
/// plain SMOTE when no row is in danger.
pub fn borderline_smote(train: &Dataset, k: usize, m: usize, seed: u64) -> Result<AugmentedDataset> {
    const NAME: &str = "b-smote";
    let stats = checked_stats(train)?;
    let mut out = AugmentedDataset::unchanged(train, NAME, seed);
    if stats.deficit() == 0 {
        return Ok(out);
    }
    let mut notes = Vec::new();
    let mn = minority_neighbors(train, &stats, k, &mut notes)?;
    let danger = borderline_danger_set(train, m)?;
    if danger.is_empty() {
        let mut fb = smote_named(train, k, seed, NAME)?;
        fb.fallback = Some(Fallback::NoDangerRows);
        fb.warn("no borderline minority rows; falling back to SMOTE".into());
        return Ok(fb);
    }
    let positions: Vec<usize> = danger
        .iter()
        .map(|r| mn.rows.binary_search(r).expect("danger rows are minority rows"))
        .collect();
    let mut rng = seeded_rng(seed);
    let schedule = cyclic_schedule(&positions, stats.deficit(), &mut rng);
    let (rows, records) = interpolate(train, &mn, &schedule, &mut rng);
    finish(&mut out, train, &stats, rows, records, notes)?;
    Ok(out)
}

/// Splits `total` across integer `weights` in proportion: each share is
/// floored and the remainder goes to the largest fractional parts, lower
/// index first on ties. Exact integer arithmetic; the result sums to `total`
/// whenever some weight is positive.
pub fn apportion(weights: &[usize], total: usize) -> Vec<usize> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let scaled: Vec<u128> = weights.iter().map(|&w| w as u128 * total as u128).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| (s / sum) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] % sum).cmp(&(scaled[a] % sum)).then(a.cmp(&b)));
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// ADASYN allocation: each minority row's share of the deficit is
/// proportional to the fraction of majority rows among its `k` nearest
/// neighbors over the whole set.
pub fn adasyn_plan(train: &Dataset, k: usize) -> Result<SynthesisPlan> {
    let stats = checked_stats(train)?;
    let k_eff = k.min(train.n_rows() - 1);
    let index = KnnIndex::new(train.features().clone());
    let minority_rows = train.indices_of(stats.minority_label);
    let majority = minority_rows
        .iter()
        .map(|&i| {
            let nn = index.query_row(i, k_eff)?;
            Ok(nn
                .iter()
                .filter(|&&j| train.labels()[j] != stats.minority_label)
                .count())
        })
        .collect::<Result<Vec<usize>>>()?;
    if majority.iter().all(|&m| m == 0) {
        return Err(OversampleError::AllZeroDensity);
    }
    let total = stats.deficit();
    // densities share the denominator k, so the counts apportion exactly
    let counts = apportion(&majority, total);
    let density = majority.iter().map(|&m| m as f64 / k_eff as f64).collect();
    Ok(SynthesisPlan {
        minority_rows,
        density,
        counts,
        total,
    })
}

/// ADASYN: density-weighted SMOTE. Falls back to plain SMOTE when no
/// minority row has a majority neighbor.
pub fn adasyn(train: &Dataset, k: usize, seed: u64) -> Result<AugmentedDataset> {
    const NAME: &str = "adasyn";
    let stats = checked_stats(train)?;
    let mut out = AugmentedDataset::unchanged(train, NAME, seed);
    if stats.deficit() == 0 {
        return Ok(out);
    }
    let mut notes = Vec::new();
    let mn = minority_neighbors(train, &stats, k, &mut notes)?;
    let plan = match adasyn_plan(train, k) {
        Ok(plan) => plan,
        Err(OversampleError::AllZeroDensity) => {
            let mut fb = smote_named(train, k, seed, NAME)?;
            fb.fallback = Some(Fallback::AllZeroDensity);
            fb.warn("all minority densities are zero; falling back to SMOTE".into());
            return Ok(fb);
        }
        Err(e) => return Err(e),
    };
    let schedule: Vec<usize> = plan
        .counts
        .iter()
        .enumerate()
        .flat_map(|(pos, &g)| std::iter::repeat_n(pos, g))
        .collect();
    let mut rng = seeded_rng(seed);
    let (rows, records) = interpolate(train, &mn, &schedule, &mut rng);
    finish(&mut out, train, &stats, rows, records, notes)?;
    Ok(out)
}
