//! Mean F1 ranks of samplers across (dataset, classifier) cells.

use std::collections::HashMap;

use super::report::MetricsReport;
use super::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct F1Entry {
    pub dataset: String,
    pub classifier: String,
    pub sampler: String,
    pub f1: f64,
}

/// F1 scores keyed by (dataset, classifier, sampler). Axis order follows
/// first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct F1Table {
    pub entries: Vec<F1Entry>,
}

impl F1Table {
    pub fn push(&mut self, dataset: &str, classifier: &str, sampler: &str, f1: f64) {
        self.entries.push(F1Entry {
            dataset: dataset.to_string(),
            classifier: classifier.to_string(),
            sampler: sampler.to_string(),
            f1,
        });
    }

    /// Mean F1 of every cell in `report`.
    pub fn from_report(report: &MetricsReport) -> Self {
        let mut t = F1Table::default();
        for c in &report.cells {
            t.push(&c.dataset, &c.classifier, &c.sampler, c.f1.mean);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRanks {
    pub dataset: String,
    pub classifier: String,
    /// Rank of each sampler, aligned with [`RankTable::samplers`].
    pub ranks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub samplers: Vec<String>,
    pub classifiers: Vec<String>,
    pub datasets: Vec<String>,
    /// `per_classifier[s][c]`: mean rank of sampler `s` under classifier `c`.
    pub per_classifier: Vec<Vec<f64>>,
    /// Mean rank of each sampler over all cells.
    pub overall: Vec<f64>,
    pub cells: Vec<CellRanks>,
}

impl RankTable {
    pub fn sampler_index(&self, name: &str) -> Option<usize> {
        self.samplers.iter().position(|s| s == name)
    }

    pub fn classifier_index(&self, name: &str) -> Option<usize> {
        self.classifiers.iter().position(|c| c == name)
    }

    /// Sampler with the lowest overall mean rank (first on ties).
    pub fn best_overall(&self) -> &str {
        let best = (0..self.samplers.len())
            .min_by(|&a, &b| self.overall[a].total_cmp(&self.overall[b]).then(a.cmp(&b)))
            .expect("at least two samplers");
        &self.samplers[best]
    }
}

/// Ranks of `values` in descending order (1 = largest); tied values share
/// the mean of the positions they occupy.
pub fn descending_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j are 1-based (i+1)..=(j+1)
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

pub fn mean_rank(table: &F1Table) -> Result<RankTable> {
    let datasets = first_seen(table.entries.iter().map(|e| e.dataset.as_str()));
    let classifiers = first_seen(table.entries.iter().map(|e| e.classifier.as_str()));
    let samplers = first_seen(table.entries.iter().map(|e| e.sampler.as_str()));
    if samplers.len() < 2 {
        return Err(BenchError::TooFewSamplers(samplers.len()));
    }
    let mut lookup: HashMap<(&str, &str, &str), f64> = HashMap::new();
    for e in &table.entries {
        let key = (e.dataset.as_str(), e.classifier.as_str(), e.sampler.as_str());
        if lookup.insert(key, e.f1).is_some() {
            return Err(BenchError::DuplicateEntry(format!(
                "{}/{}/{}",
                e.dataset, e.classifier, e.sampler
            )));
        }
    }

    let mut cells = Vec::new();
    let mut sums = vec![vec![0.0; classifiers.len()]; samplers.len()];
    for d in &datasets {
        for (ci, c) in classifiers.iter().enumerate() {
            let values = samplers
                .iter()
                .map(|s| {
                    lookup
                        .get(&(d.as_str(), c.as_str(), s.as_str()))
                        .copied()
                        .ok_or_else(|| BenchError::IncompleteTable(format!("{d}/{c}/{s}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let ranks = descending_ranks(&values);
            for (si, r) in ranks.iter().enumerate() {
                sums[si][ci] += r;
            }
            cells.push(CellRanks {
                dataset: d.clone(),
                classifier: c.clone(),
                ranks,
            });
        }
    }
    let n_d = datasets.len() as f64;
    let per_classifier: Vec<Vec<f64>> = sums
        .iter()
        .map(|row| row.iter().map(|s| s / n_d).collect())
        .collect();
    let n_cells = cells.len() as f64;
    let overall = (0..samplers.len())
        .map(|si| cells.iter().map(|c| c.ranks[si]).sum::<f64>() / n_cells)
        .collect();
    Ok(RankTable {
        samplers,
        classifiers,
        datasets,
        per_classifier,
        overall,
        cells,
    })
}
