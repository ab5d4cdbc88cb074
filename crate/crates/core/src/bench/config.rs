//! Key-value experiment config.
//!
//! ```text
//! # comments start with '#'
//! dataset = pima, data/pima.csv, Outcome
//! dataset = creditcard, data/creditcard.csv, Class, 2000
//! samplers = none, ros, smote, b-smote, adasyn, cgan, sdg-gan
//! classifiers = logreg, rf, gbt, mlp
//! runs = 10
//! test_fraction = 0.2
//! seed = 42
//! out_dir = results
//! format = csv
//! gan_epochs = 100
//! k_neighbors = 5
//! m_neighbors = 5
//! ```
//!
//! `dataset` may repeat. Its optional fourth field keeps only that many
//! majority rows (after a seed-0 shuffle).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{parse_classifier_list, parse_sampler_list, BenchError, PipelineOptions, Result, SamplerKind};
use crate::classifiers::ClassifierKind;
use crate::tabular::{load_csv, subsample_majority, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(BenchError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "markdown",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub label_column: String,
    pub majority_cap: Option<usize>,
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset> {
        let (data, mapping) = load_csv(&self.path, &self.label_column)?;
        log::info!(
            "{}: {} rows, minority `{}` ({}) vs `{}` ({})",
            self.name,
            data.n_rows(),
            mapping.positive,
            mapping.positive_count,
            mapping.negative,
            mapping.negative_count
        );
        Ok(match self.majority_cap {
            Some(cap) => subsample_majority(&data, cap, 0),
            None => data,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub samplers: Vec<SamplerKind>,
    pub classifiers: Vec<ClassifierKind>,
    pub runs: usize,
    pub master_seed: u64,
    pub pipeline: PipelineOptions,
    pub out_dir: Option<PathBuf>,
    pub format: ReportFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            samplers: SamplerKind::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            runs: 10,
            master_seed: 0,
            pipeline: PipelineOptions::default(),
            out_dir: None,
            format: ReportFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.samplers.is_empty() {
            return bad("no samplers configured");
        }
        if self.classifiers.is_empty() {
            return bad("no classifiers configured");
        }
        let f = self.pipeline.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad("test_fraction must lie in (0, 1)");
        }
        self.pipeline
            .gan
            .validate()
            .map_err(|e| BenchError::InvalidConfig(e.to_string()))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut config = parse_config(&text)?;
    // relative dataset paths are relative to the config file
    if let Some(dir) = path.parent() {
        for d in &mut config.datasets {
            if d.path.is_relative() {
                d.path = dir.join(&d.path);
            }
        }
    }
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| BenchError::ConfigSyntax { line: i + 1, message };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let number = |what: &str| -> Result<usize> {
            value.parse().map_err(|_| err(format!("{what} must be a non-negative integer")))
        };
        match key {
            "dataset" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if !(3..=4).contains(&parts.len()) || parts[..3].iter().any(|p| p.is_empty()) {
                    return Err(err("dataset needs `name, path, label column[, majority cap]`".into()));
                }
                let majority_cap = match parts.get(3) {
                    Some(p) => Some(p.parse().map_err(|_| err("majority cap must be an integer".into()))?),
                    None => None,
                };
                config.datasets.push(DatasetSpec {
                    name: parts[0].to_string(),
                    path: PathBuf::from(parts[1]),
                    label_column: parts[2].to_string(),
                    majority_cap,
                });
            }
            "samplers" => config.samplers = parse_sampler_list(value).map_err(|e| err(e.to_string()))?,
            "classifiers" => {
                config.classifiers = parse_classifier_list(value).map_err(|e| err(e.to_string()))?
            }
            "runs" => config.runs = number("runs")?,
            "seed" | "master_seed" => {
                config.master_seed = value.parse().map_err(|_| err("seed must be a u64".into()))?
            }
            "test_fraction" => {
                config.pipeline.test_fraction =
                    value.parse().map_err(|_| err("test_fraction must be a number".into()))?
            }
            "out_dir" => config.out_dir = Some(PathBuf::from(value)),
            "format" => config.format = value.parse().map_err(|e: BenchError| err(e.to_string()))?,
            "gan_epochs" => config.pipeline.gan.epochs = number("gan_epochs")?,
            "k_neighbors" => config.pipeline.k_neighbors = number("k_neighbors")?,
            "m_neighbors" => config.pipeline.m_neighbors = number("m_neighbors")?,
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_key() {
        let text = "\
# grid
dataset = pima, data/pima.csv, Outcome
dataset = cc, cc.csv, Class, 2000   # capped
samplers = none, smote, sdg-gan
classifiers = lr, rf
runs = 3
seed = 42
test_fraction = 0.25
out_dir = results
format = markdown
gan_epochs = 20
k_neighbors = 4
m_neighbors = 6
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.datasets.len(), 2);
        assert_eq!(c.datasets[1].majority_cap, Some(2000));
        assert_eq!(c.datasets[0].label_column, "Outcome");
        assert_eq!(c.samplers, vec![SamplerKind::None, SamplerKind::Smote, SamplerKind::SdgGan]);
        assert_eq!(c.classifiers, vec![ClassifierKind::LogReg, ClassifierKind::RandomForest]);
        assert_eq!((c.runs, c.master_seed), (3, 42));
        assert_eq!(c.pipeline.test_fraction, 0.25);
        assert_eq!(c.pipeline.gan.epochs, 20);
        assert_eq!((c.pipeline.k_neighbors, c.pipeline.m_neighbors), (4, 6));
        assert_eq!(c.format, ReportFormat::Markdown);
        assert_eq!(c.out_dir, Some(PathBuf::from("results")));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse_config("runs 3"), Err(BenchError::ConfigSyntax { line: 1, .. })));
        assert!(matches!(parse_config("\nfoo = 1"), Err(BenchError::ConfigSyntax { line: 2, .. })));
        assert!(parse_config("samplers = smote, gan").is_err());
        assert!(parse_config("dataset = a, b").is_err());
        let zero = parse_config("runs = 0").unwrap();
        assert!(zero.validate().is_err());
        let none = parse_config("samplers = ").unwrap();
        assert!(none.validate().is_err());
    }
}
