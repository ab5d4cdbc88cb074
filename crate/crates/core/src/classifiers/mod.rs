//! Downstream classifiers: logistic regression, random forest, gradient
//! boosted trees and an MLP. Class `1` is the positive class; labels are
//! predicted as `1` iff the probability is at least [`THRESHOLD`].

mod tree;

pub use tree::{fit_boost_tree, fit_class_tree, BoostTreeParams, ClassTreeParams, Tree};

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::matrix::Matrix;
use crate::nn::{bce_loss, init_chain, sigmoid, Activation, AdamState, Mlp, NnError};
use crate::tabular::{imbalance_stats, Dataset};
use crate::{seeded_rng, splitmix64};

pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("both classes must be present in the training data")]
    SingleClass,
    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unknown classifier `{0}`")]
    UnknownKind(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T, E = ClassifierError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    LogReg,
    RandomForest,
    Gbt,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::LogReg,
        ClassifierKind::RandomForest,
        ClassifierKind::Gbt,
        ClassifierKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogReg => "logreg",
            ClassifierKind::RandomForest => "rf",
            ClassifierKind::Gbt => "gbt",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logreg" | "lr" => Ok(ClassifierKind::LogReg),
            "rf" | "random_forest" | "random-forest" => Ok(ClassifierKind::RandomForest),
            "gbt" | "xgb" | "xgboost" => Ok(ClassifierKind::Gbt),
            "mlp" => Ok(ClassifierKind::Mlp),
            other => Err(ClassifierError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegParams {
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            iterations: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((n_features as f64).sqrt() as usize).max(1),
            MaxFeatures::All => n_features,
            MaxFeatures::Count(c) => c.clamp(1, n_features),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum Hessian sum per child.
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            dropout: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    LogReg(LogRegParams),
    RandomForest(ForestParams),
    Gbt(GbtParams),
    Mlp(MlpParams),
}

impl ClassifierSpec {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::LogReg => ClassifierSpec::LogReg(LogRegParams::default()),
            ClassifierKind::RandomForest => ClassifierSpec::RandomForest(ForestParams::default()),
            ClassifierKind::Gbt => ClassifierSpec::Gbt(GbtParams::default()),
            ClassifierKind::Mlp => ClassifierSpec::Mlp(MlpParams::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierSpec::LogReg(_) => ClassifierKind::LogReg,
            ClassifierSpec::RandomForest(_) => ClassifierKind::RandomForest,
            ClassifierSpec::Gbt(_) => ClassifierKind::Gbt,
            ClassifierSpec::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn train(&self, data: &Dataset, seed: u64) -> Result<TrainedClassifier> {
        match self {
            ClassifierSpec::LogReg(p) => train_logreg(data, p),
            ClassifierSpec::RandomForest(p) => train_random_forest(data, p, seed),
            ClassifierSpec::Gbt(p) => train_gbt(data, p),
            ClassifierSpec::Mlp(p) => train_mlp_classifier(data, p, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Mean logistic loss on the training set after 0, 1, ..., `rounds` rounds.
    pub train_loss: Vec<f64>,
}

impl GbtModel {
    fn margin(&self, row: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.evaluate(row)).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    LogReg { weights: Vec<f64>, bias: f64 },
    Forest(Vec<Tree>),
    Gbt(GbtModel),
    Mlp(Mlp),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub kind: ClassifierKind,
    pub n_features: usize,
    pub model: Model,
}

impl TrainedClassifier {
    /// Probability of class `1` for each row, in `[0, 1]`.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.n_features,
                actual: x.cols(),
            });
        }
        Ok(match &self.model {
            Model::LogReg { weights, bias } => x
                .iter_rows()
                .map(|r| sigmoid(dot(weights, r) + bias))
                .collect(),
            Model::Forest(trees) => x
                .iter_rows()
                .map(|r| {
                    let votes = trees.iter().filter(|t| t.evaluate(r) >= THRESHOLD).count();
                    votes as f64 / trees.len() as f64
                })
                .collect(),
            Model::Gbt(m) => x.iter_rows().map(|r| sigmoid(m.margin(r))).collect(),
            Model::Mlp(net) => net.predict(x)?.into_vec(),
        })
    }

    pub fn predict_labels(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(threshold_labels(&self.predict_proba(x)?))
    }
}

/// `1` iff `p >= 0.5`.
pub fn threshold_labels(proba: &[f64]) -> Vec<u8> {
    proba.iter().map(|&p| u8::from(p >= THRESHOLD)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn require_both_classes(data: &Dataset) -> Result<()> {
    if imbalance_stats(data).is_single_class() {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

/// Mean-BCE gradient of a logistic model: `(∂w, ∂b)`.
pub fn logreg_gradient(data: &Dataset, weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
    let n = data.n_rows() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &y) in data.features().iter_rows().zip(data.labels()) {
        let err = sigmoid(dot(weights, row) + bias) - f64::from(y);
        for (g, &x) in gw.iter_mut().zip(row) {
            *g += err * x;
        }
        gb += err;
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (gw, gb / n)
}

/// Full-batch gradient descent on mean BCE from zero weights.
pub fn train_logreg(data: &Dataset, params: &LogRegParams) -> Result<TrainedClassifier> {
    require_both_classes(data)?;
    let mut weights = vec![0.0; data.n_features()];
    let mut bias = 0.0;
    for _ in 0..params.iterations {
        let (gw, gb) = logreg_gradient(data, &weights, bias);
        for (w, g) in weights.iter_mut().zip(gw) {
            *w -= params.learning_rate * g;
        }
        bias -= params.learning_rate * gb;
    }
    Ok(TrainedClassifier {
        kind: ClassifierKind::LogReg,
        n_features: data.n_features(),
        model: Model::LogReg { weights, bias },
    })
}

/// Bagged Gini CART trees; probability is the fraction of trees voting `1`.
pub fn train_random_forest(data: &Dataset, params: &ForestParams, seed: u64) -> Result<TrainedClassifier> {
    require_both_classes(data)?;
    let n = data.n_rows();
    let tree_params = ClassTreeParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        max_features: params.max_features.resolve(data.n_features()),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded_rng(splitmix64(seed ^ splitmix64(t as u64)));
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_class_tree(data.features(), data.labels(), &idx, &tree_params, &mut rng)
        })
        .collect();
    Ok(TrainedClassifier {
        kind: ClassifierKind::RandomForest,
        n_features: data.n_features(),
        model: Model::Forest(trees),
    })
}

fn mean_logistic_loss(y: &[u8], margins: &[f64]) -> f64 {
    let p: Vec<f64> = margins.iter().map(|&m| sigmoid(m)).collect();
    let t: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    bce_loss(&p, &t).expect("equal lengths").0
}

/// Second-order gradient boosting on logistic loss.
pub fn train_gbt(data: &Dataset, params: &GbtParams) -> Result<TrainedClassifier> {
    require_both_classes(data)?;
    let y = data.labels();
    let pos = y.iter().filter(|&&l| l == 1).count() as f64 / y.len() as f64;
    let base_score = (pos / (1.0 - pos)).ln();
    let mut margins = vec![base_score; y.len()];
    let tree_params = BoostTreeParams {
        max_depth: params.max_depth,
        lambda: params.lambda,
        min_child_weight: params.min_child_weight,
    };
    let mut trees = Vec::with_capacity(params.rounds);
    let mut train_loss = vec![mean_logistic_loss(y, &margins)];
    for _ in 0..params.rounds {
        let (grad, hess): (Vec<f64>, Vec<f64>) = margins
            .iter()
            .zip(y)
            .map(|(&m, &l)| {
                let p = sigmoid(m);
                (p - f64::from(l), p * (1.0 - p))
            })
            .unzip();
        let tree = fit_boost_tree(data.features(), &grad, &hess, &tree_params);
        for (m, row) in margins.iter_mut().zip(data.features().iter_rows()) {
            *m += params.learning_rate * tree.evaluate(row);
        }
        trees.push(tree);
        train_loss.push(mean_logistic_loss(y, &margins));
    }
    Ok(TrainedClassifier {
        kind: ClassifierKind::Gbt,
        n_features: data.n_features(),
        model: Model::Gbt(GbtModel {
            base_score,
            learning_rate: params.learning_rate,
            trees,
            train_loss,
        }),
    })
}

/// MLP with ReLU hidden layers and a sigmoid output, Adam on mean BCE.
pub fn train_mlp_classifier(data: &Dataset, params: &MlpParams, seed: u64) -> Result<TrainedClassifier> {
    require_both_classes(data)?;
    let mut rng = seeded_rng(seed);
    let mut sizes = vec![data.n_features()];
    sizes.extend(&params.hidden);
    sizes.push(1);
    let mut net = init_chain(&sizes, Activation::Relu, Activation::Sigmoid, params.dropout, rng.random())?;
    let mut opt = AdamState::new(&net, params.learning_rate);
    let targets: Vec<f64> = data.labels().iter().map(|&l| f64::from(l)).collect();
    let mut order: Vec<usize> = (0..data.n_rows()).collect();
    let batch_size = params.batch_size.max(1);
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let x = data.features().select_rows(batch);
            let t: Vec<f64> = batch.iter().map(|&i| targets[i]).collect();
            let (p, cache) = net.forward(&x, true, rng.random())?;
            let (_, g) = bce_loss(p.as_slice(), &t)?;
            let bp = net.backward(&cache, &Matrix::from_vec(batch.len(), 1, g))?;
            opt.step(&mut net, &bp.grads)?;
        }
    }
    Ok(TrainedClassifier {
        kind: ClassifierKind::Mlp,
        n_features: data.n_features(),
        model: Model::Mlp(net),
    })
}
