//! Conditional GAN oversampler with a feature-matching generator objective,
//! plus the plain conditional GAN baseline.
//!
//! Both networks receive the class label as one extra scalar input column.
//! Data lives in `[0, 1]` after min-max scaling while the generator emits
//! `tanh` values in `[-1, 1]`; [`RangeMap`] converts between the two.
//!
//! Each mini-batch runs three updates:
//!
//! 1. discriminator BCE step on real conditioned rows, target 1;
//! 2. discriminator BCE step on generated rows conditioned on the same
//!    labels, target 0;
//! 3. generator step. With [`GanObjective::FeatureMatching`] the generator
//!    minimizes the squared distance between the mean discriminator features
//!    (at [`TrainingConfig::feature_layer`]) of the real batch and of its own
//!    batch. With [`GanObjective::Adversarial`] it minimizes BCE of the
//!    discriminator's verdict on its rows against target 1.

use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::nn::{bce_loss, init_chain, Activation, AdamState, Mlp, NnError};
use crate::oversample::{AugmentedDataset, OversampleError};
use crate::tabular::{imbalance_stats, Dataset};
use crate::{seeded_rng, Rng};

#[derive(Debug, Error)]
pub enum GanError {
    #[error("both classes must be present to train a conditional GAN")]
    SingleClass,
    #[error("invalid training config: {0}")]
    ConfigInvalid(String),
    #[error("batches must be non-empty")]
    EmptyBatch,
    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },
    #[error("cannot parse model: {0}")]
    Parse(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Oversample(#[from] OversampleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GanError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Width of the N(0, 1) noise vector fed to the generator.
    pub noise_dim: usize,
    /// Dropout on the hidden layers of both networks while training.
    pub dropout: f64,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    /// Discriminator layer whose activations are matched; must be hidden.
    pub feature_layer: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs: 100,
            batch_size: 64,
            noise_dim: 50,
            dropout: 0.2,
            generator_hidden: vec![128, 64],
            discriminator_hidden: vec![128, 64, 32],
            // the 32-unit layer
            feature_layer: 2,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(GanError::ConfigInvalid(msg.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.noise_dim == 0 {
            return bad("batch_size and noise_dim must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.generator_hidden.contains(&0) || self.discriminator_hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if self.feature_layer >= self.discriminator_hidden.len() {
            return bad("feature_layer must address a hidden discriminator layer");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GanObjective {
    /// SDG-GAN: generator matches mean intermediate discriminator features.
    FeatureMatching,
    /// cGAN: non-saturating adversarial generator loss.
    Adversarial,
}

impl GanObjective {
    pub fn name(self) -> &'static str {
        match self {
            GanObjective::FeatureMatching => "feature-matching",
            GanObjective::Adversarial => "adversarial",
        }
    }
}

/// Affine bijection between data space `[0, 1]` and generator space `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeMap {
    pub data_low: f64,
    pub data_high: f64,
}

impl Default for RangeMap {
    fn default() -> Self {
        Self {
            data_low: 0.0,
            data_high: 1.0,
        }
    }
}

impl RangeMap {
    #[inline]
    pub fn to_generator(&self, x: f64) -> f64 {
        2.0 * (x - self.data_low) / (self.data_high - self.data_low) - 1.0
    }

    #[inline]
    pub fn to_data(&self, y: f64) -> f64 {
        self.data_low + (y + 1.0) * 0.5 * (self.data_high - self.data_low)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub d_loss: f64,
    pub g_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    /// `noise_dim + 1 → hidden (ReLU) → n_features (tanh)`
    pub generator: Mlp,
    /// `n_features + 1 → hidden (ReLU) → 1 (sigmoid)`
    pub discriminator: Mlp,
    pub config: TrainingConfig,
    pub objective: GanObjective,
    pub range_map: RangeMap,
    pub minority_label: u8,
    pub loss_history: Vec<EpochLoss>,
}

impl GanModel {
    /// Fresh, untrained networks for `n_features` columns.
    pub fn init(
        n_features: usize,
        minority_label: u8,
        config: &TrainingConfig,
        objective: GanObjective,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(seed);
        let mut g_sizes = vec![config.noise_dim + 1];
        g_sizes.extend(&config.generator_hidden);
        g_sizes.push(n_features);
        let generator = init_chain(&g_sizes, Activation::Relu, Activation::Tanh, config.dropout, rng.random())?;
        let mut d_sizes = vec![n_features + 1];
        d_sizes.extend(&config.discriminator_hidden);
        d_sizes.push(1);
        let discriminator =
            init_chain(&d_sizes, Activation::Relu, Activation::Sigmoid, config.dropout, rng.random())?;
        Ok(Self {
            generator,
            discriminator,
            config: config.clone(),
            objective,
            range_map: RangeMap::default(),
            minority_label,
            loss_history: Vec::new(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.generator.output_dim()
    }

    /// Generator input for `n` rows: N(0, 1) noise with the label appended.
    pub fn generator_input(&self, n: usize, label: u8, rng: &mut Rng) -> Matrix {
        let width = self.config.noise_dim + 1;
        let mut data = Vec::with_capacity(n * width);
        for _ in 0..n {
            data.extend((0..self.config.noise_dim).map(|_| -> f64 { StandardNormal.sample(rng) }));
            data.push(f64::from(label));
        }
        Matrix::from_vec(n, width, data)
    }

    /// `n` rows of class `label` in data space.
    pub fn generate(&self, n: usize, label: u8, seed: u64) -> Result<Matrix> {
        let input = self.generator_input(n, label, &mut seeded_rng(seed));
        let out = self.generator.predict(&input)?;
        Ok(out.map(|v| self.range_map.to_data(v)))
    }

    /// Discriminator probability that each data-space row of class `label` is real.
    pub fn discriminate(&self, rows: &Matrix, label: u8) -> Result<Vec<f64>> {
        let input = self.condition(rows, &vec![label; rows.rows()]);
        Ok(self.discriminator.predict(&input)?.into_vec())
    }

    fn condition(&self, data_rows: &Matrix, labels: &[u8]) -> Matrix {
        let scaled = data_rows.map(|v| self.range_map.to_generator(v));
        let labels: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        scaled.with_column(&labels)
    }

    /// Serializes the model as text: a `key value` header followed by the
    /// two networks in [`Mlp::to_text`] form.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "gan 1");
        let _ = writeln!(s, "objective {}", self.objective.name());
        let _ = writeln!(s, "minority_label {}", self.minority_label);
        let _ = writeln!(s, "range_map {:?} {:?}", self.range_map.data_low, self.range_map.data_high);
        let _ = writeln!(s, "learning_rate {:?}", c.learning_rate);
        let _ = writeln!(s, "epochs {}", c.epochs);
        let _ = writeln!(s, "batch_size {}", c.batch_size);
        let _ = writeln!(s, "noise_dim {}", c.noise_dim);
        let _ = writeln!(s, "dropout {:?}", c.dropout);
        let _ = writeln!(s, "generator_hidden {}", join(&c.generator_hidden));
        let _ = writeln!(s, "discriminator_hidden {}", join(&c.discriminator_hidden));
        let _ = writeln!(s, "feature_layer {}", c.feature_layer);
        s.push_str("[generator]\n");
        s.push_str(&self.generator.to_text());
        s.push_str("[discriminator]\n");
        s.push_str(&self.discriminator.to_text());
        s
    }

    /// Inverse of [`GanModel::to_text`]. Loss history is not stored.
    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |m: &str| GanError::Parse(m.to_string());
        let (header, rest) = text
            .split_once("[generator]\n")
            .ok_or_else(|| perr("missing [generator] section"))?;
        let (gen_text, disc_text) = rest
            .split_once("[discriminator]\n")
            .ok_or_else(|| perr("missing [discriminator] section"))?;
        let mut lines = header.lines();
        if lines.next().map(str::trim) != Some("gan 1") {
            return Err(perr("bad magic line"));
        }
        let mut config = TrainingConfig::default();
        let mut objective = None;
        let mut minority_label = None;
        let mut range_map = RangeMap::default();
        let num = |v: &str| v.parse::<f64>().map_err(|_| perr(&format!("invalid number `{v}`")));
        let int = |v: &str| v.parse::<usize>().map_err(|_| perr(&format!("invalid integer `{v}`")));
        let list = |v: &str| v.split(',').map(int).collect::<Result<Vec<_>>>();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (key, value) = line.split_once(' ').ok_or_else(|| perr("malformed header line"))?;
            match key {
                "objective" => {
                    objective = Some(match value {
                        "feature-matching" => GanObjective::FeatureMatching,
                        "adversarial" => GanObjective::Adversarial,
                        _ => return Err(perr("unknown objective")),
                    })
                }
                "minority_label" => minority_label = Some(int(value)? as u8),
                "range_map" => {
                    let (lo, hi) = value.split_once(' ').ok_or_else(|| perr("bad range_map"))?;
                    range_map = RangeMap {
                        data_low: num(lo)?,
                        data_high: num(hi)?,
                    };
                }
                "learning_rate" => config.learning_rate = num(value)?,
                "epochs" => config.epochs = int(value)?,
                "batch_size" => config.batch_size = int(value)?,
                "noise_dim" => config.noise_dim = int(value)?,
                "dropout" => config.dropout = num(value)?,
                "generator_hidden" => config.generator_hidden = list(value)?,
                "discriminator_hidden" => config.discriminator_hidden = list(value)?,
                "feature_layer" => config.feature_layer = int(value)?,
                other => return Err(perr(&format!("unknown key `{other}`"))),
            }
        }
        config.validate()?;
        Ok(Self {
            generator: Mlp::from_text(gen_text)?,
            discriminator: Mlp::from_text(disc_text)?,
            config,
            objective: objective.ok_or_else(|| perr("missing objective"))?,
            range_map,
            minority_label: minority_label.ok_or_else(|| perr("missing minority_label"))?,
            loss_history: Vec::new(),
        })
    }

    /// Loss history as CSV: `epoch,d_loss,g_loss`.
    pub fn write_loss_history<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,d_loss,g_loss")?;
        for (i, l) in self.loss_history.iter().enumerate() {
            writeln!(w, "{},{},{}", i + 1, l.d_loss, l.g_loss)?;
        }
        Ok(())
    }
}

/// Squared L2 distance between the mean discriminator features of two
/// conditioned batches at `layer`, and its gradient with respect to the
/// rows of `fake`. Features are taken in inference mode.
pub fn feature_matching_loss(
    disc: &Mlp,
    real: &Matrix,
    fake: &Matrix,
    layer: usize,
) -> Result<(f64, Matrix)> {
    if real.rows() == 0 || fake.rows() == 0 {
        return Err(GanError::EmptyBatch);
    }
    if real.cols() != fake.cols() {
        return Err(GanError::DimensionMismatch {
            expected: real.cols(),
            actual: fake.cols(),
        });
    }
    let real_mean = disc.forward_features(real, layer)?.column_means();
    let (fake_feat, cache) = disc.forward_to(fake, layer, false, 0)?;
    let fake_mean = fake_feat.column_means();
    let diff: Vec<f64> = real_mean.iter().zip(&fake_mean).map(|(r, f)| r - f).collect();
    let loss = diff.iter().map(|d| d * d).sum();
    let scale = -2.0 / fake.rows() as f64;
    let row: Vec<f64> = diff.iter().map(|d| scale * d).collect();
    let mut grad = Matrix::zeros(fake_feat.rows(), fake_feat.cols());
    for r in 0..grad.rows() {
        grad.row_mut(r).copy_from_slice(&row);
    }
    let bp = disc.backward(&cache, &grad)?;
    Ok((loss, bp.input_grad))
}

/// Trains the feature-matching conditional GAN.
pub fn train_sdg_gan(train: &Dataset, config: &TrainingConfig, seed: u64) -> Result<GanModel> {
    train_gan(train, config, GanObjective::FeatureMatching, seed)
}

/// Trains the adversarial conditional GAN baseline.
pub fn train_cgan(train: &Dataset, config: &TrainingConfig, seed: u64) -> Result<GanModel> {
    train_gan(train, config, GanObjective::Adversarial, seed)
}

pub fn train_gan(
    train: &Dataset,
    config: &TrainingConfig,
    objective: GanObjective,
    seed: u64,
) -> Result<GanModel> {
    config.validate()?;
    let stats = imbalance_stats(train);
    if stats.is_single_class() {
        return Err(GanError::SingleClass);
    }
    let mut rng = seeded_rng(seed);
    let mut model = GanModel::init(
        train.n_features(),
        stats.minority_label,
        config,
        objective,
        rng.random(),
    )?;
    let mut g_opt = AdamState::new(&model.generator, config.learning_rate);
    let mut d_opt = AdamState::new(&model.discriminator, config.learning_rate);
    let conditioned = model.condition(train.features(), train.labels());
    let mut order: Vec<usize> = (0..train.n_rows()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut d_sum = 0.0;
        let mut g_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let labels: Vec<u8> = batch.iter().map(|&i| train.labels()[i]).collect();
            let label_col: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
            let real = conditioned.select_rows(batch);
            let b = batch.len();

            // discriminator on real rows
            let (p_real, d_cache) = model.discriminator.forward(&real, true, rng.random())?;
            let (l_real, g) = bce_loss(p_real.as_slice(), &vec![1.0; b])?;
            let bp = model
                .discriminator
                .backward(&d_cache, &Matrix::from_vec(b, 1, g))?;
            d_opt.step(&mut model.discriminator, &bp.grads)?;

            // discriminator on generated rows with the batch's labels
            let mut z = Matrix::zeros(b, config.noise_dim + 1);
            for (r, &l) in label_col.iter().enumerate() {
                let row = z.row_mut(r);
                for v in &mut row[..config.noise_dim] {
                    *v = StandardNormal.sample(&mut rng);
                }
                row[config.noise_dim] = l;
            }
            let (fake, g_cache) = model.generator.forward(&z, true, rng.random())?;
            let fake_cond = fake.with_column(&label_col);
            let (p_fake, d_cache) = model.discriminator.forward(&fake_cond, true, rng.random())?;
            let (l_fake, g) = bce_loss(p_fake.as_slice(), &vec![0.0; b])?;
            let bp = model
                .discriminator
                .backward(&d_cache, &Matrix::from_vec(b, 1, g))?;
            d_opt.step(&mut model.discriminator, &bp.grads)?;

            // generator; its parameters are unchanged since `g_cache` was recorded
            let (g_loss, grad_cond) = match objective {
                GanObjective::FeatureMatching => {
                    feature_matching_loss(&model.discriminator, &real, &fake_cond, config.feature_layer)?
                }
                GanObjective::Adversarial => {
                    let (p, cache) = model.discriminator.forward(&fake_cond, false, 0)?;
                    let (l, g) = bce_loss(p.as_slice(), &vec![1.0; b])?;
                    let bp = model
                        .discriminator
                        .backward(&cache, &Matrix::from_vec(b, 1, g))?;
                    (l, bp.input_grad)
                }
            };
            let grad_fake = grad_cond.without_last_columns(1);
            let bp = model.generator.backward(&g_cache, &grad_fake)?;
            g_opt.step(&mut model.generator, &bp.grads)?;

            d_sum += 0.5 * (l_real + l_fake);
            g_sum += g_loss;
            batches += 1;
        }
        let loss = EpochLoss {
            d_loss: d_sum / batches as f64,
            g_loss: g_sum / batches as f64,
        };
        if !(loss.d_loss.is_finite() && loss.g_loss.is_finite())
            || !model.generator.all_finite()
            || !model.discriminator.all_finite()
        {
            return Err(GanError::Diverged { epoch });
        }
        model.loss_history.push(loss);
    }
    Ok(model)
}

/// `n` minority rows in data space, from the generator in inference mode.
pub fn generate_minority(model: &GanModel, n: usize, seed: u64) -> Result<Matrix> {
    model.generate(n, model.minority_label, seed)
}

/// Appends exactly `n_majority - n_minority` generated minority rows.
/// Balanced input comes back unchanged.
pub fn oversample_to_balance(model: &GanModel, train: &Dataset, seed: u64) -> Result<AugmentedDataset> {
    let name = match model.objective {
        GanObjective::FeatureMatching => "sdg-gan",
        GanObjective::Adversarial => "cgan",
    };
    if train.n_features() != model.n_features() {
        return Err(GanError::DimensionMismatch {
            expected: model.n_features(),
            actual: train.n_features(),
        });
    }
    let stats = imbalance_stats(train);
    if stats.is_single_class() {
        return Err(GanError::SingleClass);
    }
    if stats.deficit() == 0 {
        return Ok(AugmentedDataset::unchanged(train, name, seed));
    }
    let rows = model.generate(stats.deficit(), stats.minority_label, seed)?;
    Ok(AugmentedDataset::with_synthetic(
        train,
        &rows,
        stats.minority_label,
        name,
        seed,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;

    fn tiny_config(epochs: usize) -> TrainingConfig {
        TrainingConfig {
            epochs,
            batch_size: 8,
            noise_dim: 4,
            generator_hidden: vec![8],
            discriminator_hidden: vec![8, 4],
            feature_layer: 1,
            ..TrainingConfig::default()
        }
    }

    fn toy(n_min: usize, n_maj: usize) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_min {
            rows.push([0.7 + 0.01 * i as f64, 0.6]);
            labels.push(1);
        }
        for i in 0..n_maj {
            rows.push([0.2 + 0.005 * i as f64, 0.3]);
            labels.push(0);
        }
        Dataset::unnamed(Matrix::from_rows(&rows), labels).unwrap()
    }

    #[test]
    fn default_config_values() {
        let c = TrainingConfig::default();
        assert_eq!(c.learning_rate, 1e-4);
        assert_eq!(c.batch_size, 64);
        assert_eq!(c.epochs, 100);
        assert_eq!(c.noise_dim, 50);
        assert_eq!(c.dropout, 0.2);
        assert_eq!(c.discriminator_hidden[c.feature_layer], 32);
        c.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let mut c = TrainingConfig::default();
        c.feature_layer = 3;
        assert!(matches!(c.validate(), Err(GanError::ConfigInvalid(_))));
        let c = TrainingConfig {
            batch_size: 0,
            ..TrainingConfig::default()
        };
        assert!(c.validate().is_err());
        let c = TrainingConfig {
            dropout: 1.0,
            ..TrainingConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn range_map_is_a_bijection() {
        let m = RangeMap::default();
        assert_eq!(m.to_generator(0.0), -1.0);
        assert_eq!(m.to_generator(1.0), 1.0);
        for x in [0.0, 0.25, 0.5, 0.9] {
            assert!((m.to_data(m.to_generator(x)) - x).abs() < 1e-15);
        }
    }

    #[test]
    fn network_shapes_follow_config() {
        let m = GanModel::init(30, 1, &TrainingConfig::default(), GanObjective::FeatureMatching, 0).unwrap();
        let g: Vec<_> = m.generator.layers.iter().map(|l| (l.fan_in(), l.fan_out())).collect();
        assert_eq!(g, vec![(51, 128), (128, 64), (64, 30)]);
        let d: Vec<_> = m.discriminator.layers.iter().map(|l| (l.fan_in(), l.fan_out())).collect();
        assert_eq!(d, vec![(31, 128), (128, 64), (64, 32), (32, 1)]);
        assert_eq!(m.generator.layers[2].activation, Activation::Tanh);
        assert_eq!(m.discriminator.layers[3].activation, Activation::Sigmoid);
        let x = Matrix::zeros(3, 31);
        assert_eq!(m.discriminator.forward_features(&x, 2).unwrap().cols(), 32);
    }

    #[test]
    fn fm_loss_zero_on_identical_batches() {
        let m = GanModel::init(3, 1, &tiny_config(0), GanObjective::FeatureMatching, 1).unwrap();
        let x = Matrix::from_rows(&[[0.1, -0.2, 0.3, 1.0], [0.5, 0.5, -0.5, 1.0]]);
        let (loss, grad) = feature_matching_loss(&m.discriminator, &x, &x, 1).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn fm_loss_hand_value() {
        // identity feature layer on the first input column
        let disc = Mlp {
            layers: vec![
                Layer {
                    weights: Matrix::from_rows(&[[1.0], [0.0]]),
                    bias: vec![0.0],
                    activation: Activation::Identity,
                },
                Layer {
                    weights: Matrix::from_rows(&[[1.0]]),
                    bias: vec![0.0],
                    activation: Activation::Sigmoid,
                },
            ],
            dropout_rate: 0.0,
        };
        let real = Matrix::from_rows(&[[0.5, 1.0], [0.7, 1.0]]);
        let fake = Matrix::from_rows(&[[0.0, 1.0], [0.2, 1.0]]);
        let (loss, grad) = feature_matching_loss(&disc, &real, &fake, 0).unwrap();
        assert!((loss - 0.25).abs() < 1e-12);
        // d/dfake_i = -2·(0.6 − 0.1)/2
        assert!((grad.get(0, 0) + 0.5).abs() < 1e-12);
        assert_eq!(grad.get(0, 1), 0.0);
    }

    #[test]
    fn fm_loss_errors() {
        let m = GanModel::init(2, 1, &tiny_config(0), GanObjective::FeatureMatching, 1).unwrap();
        let x = Matrix::zeros(2, 3);
        assert!(matches!(
            feature_matching_loss(&m.discriminator, &Matrix::zeros(0, 3), &x, 0),
            Err(GanError::EmptyBatch)
        ));
        assert!(matches!(
            feature_matching_loss(&m.discriminator, &x, &x, 7),
            Err(GanError::Nn(NnError::IndexOutOfRange { .. }))
        ));
    }

    #[test]
    fn zero_epochs_gives_usable_untrained_model() {
        let d = toy(6, 20);
        let m = train_sdg_gan(&d, &tiny_config(0), 3).unwrap();
        assert!(m.loss_history.is_empty());
        let rows = generate_minority(&m, 5, 0).unwrap();
        assert_eq!(rows.shape(), (5, 2));
        assert!(rows.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn training_is_deterministic() {
        let d = toy(10, 30);
        for objective in [GanObjective::FeatureMatching, GanObjective::Adversarial] {
            let a = train_gan(&d, &tiny_config(3), objective, 9).unwrap();
            let b = train_gan(&d, &tiny_config(3), objective, 9).unwrap();
            assert_eq!(a.loss_history.len(), 3);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_class_rejected() {
        let d = Dataset::unnamed(Matrix::from_rows(&[[0.1], [0.2]]), vec![0, 0]).unwrap();
        assert!(matches!(train_cgan(&d, &tiny_config(1), 0), Err(GanError::SingleClass)));
    }

    #[test]
    fn generator_input_carries_minority_label() {
        let m = GanModel::init(2, 1, &tiny_config(0), GanObjective::FeatureMatching, 1).unwrap();
        let z = m.generator_input(50, m.minority_label, &mut seeded_rng(4));
        assert!(z.column(4).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn balance_counts() {
        let d = toy(6, 20);
        let m = train_sdg_gan(&d, &tiny_config(1), 3).unwrap();
        let out = oversample_to_balance(&m, &d, 1).unwrap();
        assert_eq!(out.n_synthetic(), 14);
        assert_eq!(out.sampler, "sdg-gan");
        let balanced = toy(5, 5);
        assert_eq!(oversample_to_balance(&m, &balanced, 1).unwrap().n_synthetic(), 0);
        let wide = Dataset::unnamed(Matrix::zeros(2, 3), vec![0, 1]).unwrap();
        assert!(matches!(
            oversample_to_balance(&m, &wide, 1),
            Err(GanError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let d = toy(6, 20);
        let m = train_cgan(&d, &tiny_config(2), 3).unwrap();
        let back = GanModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back.generator, m.generator);
        assert_eq!(back.discriminator, m.discriminator);
        assert_eq!(back.config, m.config);
        assert_eq!(back.objective, m.objective);
        assert_eq!(generate_minority(&back, 4, 2).unwrap(), generate_minority(&m, 4, 2).unwrap());

        let mut buf = Vec::new();
        m.write_loss_history(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("epoch,d_loss,g_loss\n1,"));
    }
}
