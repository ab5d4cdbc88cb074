//! Experiment harness: dataset × sampler × classifier × seeded runs.
//!
//! Each run re-draws a stratified split, fits a min-max scaler on the
//! training rows only, balances the training rows with the chosen sampler,
//! trains a classifier and scores the minority class on the test rows.
//!
//! Seeds are derived from the cell coordinates with [`stable_hash`]:
//!
//! * split: `(master, dataset, run)`
//! * sampler: `(master, dataset, sampler, run)`
//! * classifier: `(master, dataset, sampler, classifier, run)`
//!
//! so every method in a run sees the same split, one sampler fit (for
//! example one GAN) serves all classifiers of that run, and adding a
//! sampler or classifier never changes the numbers of another cell.

mod config;
mod metrics;
mod rank;
mod report;
mod synth;

pub use config::{load_config, parse_config, DatasetSpec, ExperimentConfig, ReportFormat};
pub use metrics::{compute_metrics, Confusion, Metrics};
pub use rank::{descending_ranks, mean_rank, CellRanks, F1Entry, F1Table, RankTable};
pub use report::{
    emit_report, parse_metrics_csv, read_f1_table, render_markdown, render_rank_markdown,
    write_metrics_csv, write_rank_csv, write_rank_table, CellSummary, MetricsReport, Summary,
};
pub use synth::synth_dataset;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::classifiers::{ClassifierError, ClassifierKind, ClassifierSpec};
use crate::gan::{oversample_to_balance, train_gan, GanError, GanObjective, TrainingConfig};
use crate::oversample::{
    adasyn, borderline_smote, random_oversample, smote, AugmentedDataset, OversampleError,
    DEFAULT_K, DEFAULT_M,
};
use crate::tabular::{stratified_split, Dataset, ScalerParams, TabularError, TrainTestSplit};
use crate::{splitmix64, stable_hash};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("F1 table has no entry for {0}")]
    IncompleteTable(String),
    #[error("F1 table has more than one entry for {0}")]
    DuplicateEntry(String),
    #[error("ranking needs at least two samplers, got {0}")]
    TooFewSamplers(usize),
    #[error("report has no cells")]
    EmptyReport,
    #[error("unknown sampler `{0}`")]
    UnknownSampler(String),
    #[error("unknown report format `{0}`")]
    UnknownFormat(String),
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    /// A failure shared by every classifier of a run, such as a sampler error.
    #[error("{0}")]
    Upstream(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Oversample(#[from] OversampleError),
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerKind {
    /// No oversampling.
    None,
    Ros,
    Smote,
    BorderlineSmote,
    Adasyn,
    Cgan,
    SdgGan,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 7] = [
        SamplerKind::None,
        SamplerKind::Ros,
        SamplerKind::Smote,
        SamplerKind::BorderlineSmote,
        SamplerKind::Adasyn,
        SamplerKind::Cgan,
        SamplerKind::SdgGan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::None => "none",
            SamplerKind::Ros => "ros",
            SamplerKind::Smote => "smote",
            SamplerKind::BorderlineSmote => "b-smote",
            SamplerKind::Adasyn => "adasyn",
            SamplerKind::Cgan => "cgan",
            SamplerKind::SdgGan => "sdg-gan",
        }
    }

    /// Column heading used in markdown tables.
    pub fn label(self) -> &'static str {
        match self {
            SamplerKind::None => "W/O",
            SamplerKind::Ros => "ROS",
            SamplerKind::Smote => "SMOTE",
            SamplerKind::BorderlineSmote => "B-SMOTE",
            SamplerKind::Adasyn => "ADASYN",
            SamplerKind::Cgan => "cGAN",
            SamplerKind::SdgGan => "SDG-GAN",
        }
    }

    pub fn is_gan(self) -> bool {
        matches!(self, SamplerKind::Cgan | SamplerKind::SdgGan)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "w/o" | "wo" => Ok(SamplerKind::None),
            "ros" => Ok(SamplerKind::Ros),
            "smote" => Ok(SamplerKind::Smote),
            "b-smote" | "bsmote" | "borderline-smote" => Ok(SamplerKind::BorderlineSmote),
            "adasyn" => Ok(SamplerKind::Adasyn),
            "cgan" => Ok(SamplerKind::Cgan),
            "sdg-gan" | "sdggan" => Ok(SamplerKind::SdgGan),
            other => Err(BenchError::UnknownSampler(other.to_string())),
        }
    }
}

/// Parses a comma-separated list such as `none,smote,sdg-gan`.
pub fn parse_sampler_list(s: &str) -> Result<Vec<SamplerKind>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

pub fn parse_classifier_list(s: &str) -> Result<Vec<ClassifierKind>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse().map_err(BenchError::from))
        .collect()
}

/// Settings shared by every cell of a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub test_fraction: f64,
    pub k_neighbors: usize,
    /// Neighborhood size for the borderline danger test.
    pub m_neighbors: usize,
    pub gan: TrainingConfig,
    /// Replaces the default hyperparameters of the matching classifier kind.
    pub classifier_overrides: Vec<ClassifierSpec>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            k_neighbors: DEFAULT_K,
            m_neighbors: DEFAULT_M,
            gan: TrainingConfig::default(),
            classifier_overrides: Vec::new(),
        }
    }
}

impl PipelineOptions {
    pub fn classifier_spec(&self, kind: ClassifierKind) -> ClassifierSpec {
        self.classifier_overrides
            .iter()
            .find(|s| s.kind() == kind)
            .cloned()
            .unwrap_or_else(|| ClassifierSpec::default_for(kind))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSeeds {
    pub split: u64,
    pub sampler: u64,
    pub classifier: u64,
}

impl CellSeeds {
    pub fn derive(
        master: u64,
        dataset: &str,
        sampler: SamplerKind,
        classifier: ClassifierKind,
        run: usize,
    ) -> Self {
        Self {
            split: stable_hash(&[&"split", &master, &dataset, &run]),
            sampler: stable_hash(&[&"sampler", &master, &dataset, &sampler.name(), &run]),
            classifier: stable_hash(&[
                &"classifier",
                &master,
                &dataset,
                &sampler.name(),
                &classifier.name(),
                &run,
            ]),
        }
    }

    /// Three independent seeds from one run seed.
    pub fn from_run_seed(seed: u64) -> Self {
        Self {
            split: splitmix64(seed ^ 0x5349_4c50),
            sampler: splitmix64(seed ^ 0x5341_4d50),
            classifier: splitmix64(seed ^ 0x434c_5346),
        }
    }
}

/// Split and scaled views of one run; the scaler is fitted on the raw
/// training rows only.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub split: TrainTestSplit,
    pub scaler: ScalerParams,
    pub train: Dataset,
    pub test: Dataset,
}

pub fn prepare_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<PreparedSplit> {
    let split = stratified_split(data, test_fraction, seed)?;
    let scaler = ScalerParams::fit(&split.train);
    let train = scaler.transform(&split.train)?;
    let test = scaler.transform(&split.test)?;
    Ok(PreparedSplit {
        split,
        scaler,
        train,
        test,
    })
}

/// Balances `train` with `kind`. A GAN whose training diverges is retried
/// once with `seed + 1`.
pub fn apply_sampler(
    kind: SamplerKind,
    train: &Dataset,
    options: &PipelineOptions,
    seed: u64,
) -> Result<AugmentedDataset> {
    let out = match kind {
        SamplerKind::None => AugmentedDataset::unchanged(train, kind.name(), seed),
        SamplerKind::Ros => random_oversample(train, seed)?,
        SamplerKind::Smote => smote(train, options.k_neighbors, seed)?,
        SamplerKind::BorderlineSmote => {
            borderline_smote(train, options.k_neighbors, options.m_neighbors, seed)?
        }
        SamplerKind::Adasyn => adasyn(train, options.k_neighbors, seed)?,
        SamplerKind::Cgan | SamplerKind::SdgGan => {
            let objective = if kind == SamplerKind::SdgGan {
                GanObjective::FeatureMatching
            } else {
                GanObjective::Adversarial
            };
            let model = match train_gan(train, &options.gan, objective, seed) {
                Err(GanError::Diverged { epoch }) => {
                    log::warn!("{kind} diverged at epoch {epoch}; retrying with seed {}", seed.wrapping_add(1));
                    train_gan(train, &options.gan, objective, seed.wrapping_add(1))?
                }
                other => other?,
            };
            oversample_to_balance(&model, train, splitmix64(seed))?
        }
    };
    for w in &out.warnings {
        log::warn!("{kind}: {w}");
    }
    Ok(out)
}

/// Trains `classifier` on `train` and scores it on `test`.
pub fn evaluate(
    spec: &ClassifierSpec,
    train: &Dataset,
    test: &Dataset,
    seed: u64,
) -> Result<Metrics> {
    let model = spec.train(train, seed)?;
    let predicted = model.predict_labels(test.features())?;
    compute_metrics(test.labels(), &predicted)
}

/// Everything one cell saw, for inspection in tests.
#[derive(Debug, Clone)]
pub struct CellTrace {
    pub prepared: PreparedSplit,
    pub augmented: AugmentedDataset,
    pub metrics: Metrics,
}

pub fn run_cell_traced(
    data: &Dataset,
    sampler: SamplerKind,
    classifier: ClassifierKind,
    seeds: CellSeeds,
    options: &PipelineOptions,
) -> Result<CellTrace> {
    let prepared = prepare_split(data, options.test_fraction, seeds.split)?;
    let augmented = apply_sampler(sampler, &prepared.train, options, seeds.sampler)?;
    let metrics = evaluate(
        &options.classifier_spec(classifier),
        &augmented.dataset,
        &prepared.test,
        seeds.classifier,
    )?;
    Ok(CellTrace {
        prepared,
        augmented,
        metrics,
    })
}

/// One seeded run of the full pipeline.
pub fn run_cell(
    data: &Dataset,
    sampler: SamplerKind,
    classifier: ClassifierKind,
    seeds: CellSeeds,
    options: &PipelineOptions,
) -> Result<Metrics> {
    Ok(run_cell_traced(data, sampler, classifier, seeds, options)?.metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub dataset: String,
    pub sampler: SamplerKind,
    pub classifier: ClassifierKind,
    pub run: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub dataset: String,
    pub sampler: SamplerKind,
    pub classifier: ClassifierKind,
    pub run: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutcome {
    /// Cells whose every run succeeded.
    pub report: MetricsReport,
    pub runs: Vec<RunResult>,
    pub failures: Vec<CellFailure>,
}

impl BenchmarkOutcome {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Per-run metrics of one cell, in run order.
    pub fn runs_of(&self, dataset: &str, sampler: SamplerKind, classifier: ClassifierKind) -> Vec<Metrics> {
        self.runs
            .iter()
            .filter(|r| r.dataset == dataset && r.sampler == sampler && r.classifier == classifier)
            .map(|r| r.metrics)
            .collect()
    }
}

/// Loads every configured dataset and runs the grid in parallel.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<BenchmarkOutcome> {
    config.validate()?;
    if config.datasets.is_empty() {
        return Err(BenchError::InvalidConfig("no datasets configured".into()));
    }
    let datasets = config
        .datasets
        .iter()
        .map(|spec| Ok((spec.name.clone(), spec.load()?)))
        .collect::<Result<Vec<_>>>()?;
    run_benchmark_on(&datasets, config, Execution::Parallel)
}

/// Runs the grid on in-memory datasets; `config.datasets` is ignored.
pub fn run_benchmark_on(
    datasets: &[(String, Dataset)],
    config: &ExperimentConfig,
    execution: Execution,
) -> Result<BenchmarkOutcome> {
    config.validate()?;
    let mut groups = Vec::new();
    for (d, _) in datasets.iter().enumerate() {
        for run in 0..config.runs {
            for &sampler in &config.samplers {
                groups.push((d, run, sampler));
            }
        }
    }
    let work = |&(d, run, sampler): &(usize, usize, SamplerKind)| {
        run_group(&datasets[d].0, &datasets[d].1, run, sampler, config)
    };
    let results: Vec<Vec<(ClassifierKind, Result<Metrics>)>> = match execution {
        Execution::Sequential => groups.iter().map(work).collect(),
        Execution::Parallel => groups.par_iter().map(work).collect(),
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (&(d, run, sampler), group) in groups.iter().zip(results) {
        for (classifier, result) in group {
            let dataset = datasets[d].0.clone();
            match result {
                Ok(metrics) => runs.push(RunResult {
                    dataset,
                    sampler,
                    classifier,
                    run,
                    metrics,
                }),
                Err(e) => {
                    log::error!("{dataset}/{sampler}/{classifier} run {run} failed: {e}");
                    failures.push(CellFailure {
                        dataset,
                        sampler,
                        classifier,
                        run,
                        message: e.to_string(),
                    });
                }
            }
        }
    }

    let mut report = MetricsReport::default();
    for (name, _) in datasets {
        for &sampler in &config.samplers {
            for &classifier in &config.classifiers {
                let failed = failures
                    .iter()
                    .any(|f| &f.dataset == name && f.sampler == sampler && f.classifier == classifier);
                if failed {
                    continue;
                }
                let cell: Vec<Metrics> = runs
                    .iter()
                    .filter(|r| &r.dataset == name && r.sampler == sampler && r.classifier == classifier)
                    .map(|r| r.metrics)
                    .collect();
                report.cells.push(CellSummary::from_runs(
                    name,
                    sampler.name(),
                    classifier.name(),
                    &cell,
                ));
            }
        }
    }
    Ok(BenchmarkOutcome {
        report,
        runs,
        failures,
    })
}

/// One split and one sampler fit, evaluated with every configured classifier.
fn run_group(
    name: &str,
    data: &Dataset,
    run: usize,
    sampler: SamplerKind,
    config: &ExperimentConfig,
) -> Vec<(ClassifierKind, Result<Metrics>)> {
    let first = config.classifiers[0];
    let seeds = CellSeeds::derive(config.master_seed, name, sampler, first, run);
    let prepared = prepare_split(data, config.pipeline.test_fraction, seeds.split).and_then(|p| {
        let aug = apply_sampler(sampler, &p.train, &config.pipeline, seeds.sampler)?;
        Ok((p, aug))
    });
    let (prepared, augmented) = match prepared {
        Ok(v) => v,
        Err(e) => {
            let msg = e.to_string();
            return config
                .classifiers
                .iter()
                .map(|&c| (c, Err(BenchError::Upstream(msg.clone()))))
                .collect();
        }
    };
    config
        .classifiers
        .iter()
        .map(|&classifier| {
            let seeds = CellSeeds::derive(config.master_seed, name, sampler, classifier, run);
            let spec = config.pipeline.classifier_spec(classifier);
            let m = evaluate(&spec, &augmented.dataset, &prepared.test, seeds.classifier);
            (classifier, m)
        })
        .collect()
}
