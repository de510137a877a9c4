//! Mini-batch Adam training on normalized heatmaps and labels.

use super::adam::{AdamState, ADAM_ALPHA};
use super::loss::mse_loss;
use super::model::{backward, forward, forward_train, Mode, NetworkParams, INPUT_SHAPE, OUTPUTS};
use super::tensor::Tensor4;
use crate::dataset::normalize::{normalize_features, normalize_labels, Normalization};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hash::mix_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const DEFAULT_EPOCHS: usize = 80;
pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const DEFAULT_DECAY_AT: f64 = 0.75;
pub const DECAY_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Fraction of the epochs after which the step size drops by
    /// [`DECAY_FACTOR`]; 1 keeps it constant.
    pub decay_at: f64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
            alpha: ADAM_ALPHA,
            decay_at: DEFAULT_DECAY_AT,
        }
    }

    /// First epoch trained at the decayed step size.
    pub fn decay_epoch(&self) -> usize {
        (self.decay_at * self.epochs as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.alpha)));
        }
        if !(self.decay_at > 0.0 && self.decay_at <= 1.0) {
            return Err(Error::Config(format!("decay point {} must lie in (0, 1]", self.decay_at)));
        }
        Ok(())
    }
}

/// Normalized features (`n × 5·26·21`) and labels (`n × 3`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub features: Vec<f64>,
    pub labels: Vec<f64>,
}

pub const EXAMPLE_LEN: usize = INPUT_SHAPE[0] * INPUT_SHAPE[1] * INPUT_SHAPE[2];

impl TrainingSet {
    pub fn new(features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        let n = labels.len() / OUTPUTS;
        if labels.len() % OUTPUTS != 0 || features.len() != n * EXAMPLE_LEN || n == 0 {
            return Err(Error::Shape(format!(
                "{} feature values and {} label values do not form examples of {EXAMPLE_LEN} and {OUTPUTS}",
                features.len(),
                labels.len()
            )));
        }
        Ok(TrainingSet { features, labels })
    }

    /// Normalize the selected dataset examples with `norm`.
    pub fn from_examples(dataset: &Dataset, ids: &[usize], norm: &Normalization) -> Result<Self> {
        if dataset.manifest.tensor_shape != INPUT_SHAPE {
            return Err(Error::Shape(format!(
                "dataset tensors are {:?}, the network takes {INPUT_SHAPE:?}",
                dataset.manifest.tensor_shape
            )));
        }
        let parts = ids
            .par_iter()
            .map(|&i| {
                let ex = dataset.examples.get(i).ok_or(Error::Index {
                    what: "example",
                    index: i,
                    len: dataset.len(),
                })?;
                Ok((normalize_features(&ex.tensor, &norm.features)?, normalize_labels(ex.label, &norm.labels)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut features = Vec::with_capacity(ids.len() * EXAMPLE_LEN);
        let mut labels = Vec::with_capacity(ids.len() * OUTPUTS);
        for (f, l) in parts {
            features.extend_from_slice(&f);
            labels.extend_from_slice(&l);
        }
        Self::new(features, labels)
    }

    /// Training split of a dataset under its own normalization.
    pub fn from_dataset(dataset: &Dataset) -> Result<Self> {
        let (train, _) = dataset.split()?;
        Self::from_examples(dataset, &train, dataset.normalization())
    }

    pub fn len(&self) -> usize {
        self.labels.len() / OUTPUTS
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn batch(&self, idx: &[usize]) -> (Tensor4, Vec<f64>) {
        let mut x = Vec::with_capacity(idx.len() * EXAMPLE_LEN);
        let mut y = Vec::with_capacity(idx.len() * OUTPUTS);
        for &i in idx {
            x.extend_from_slice(&self.features[i * EXAMPLE_LEN..(i + 1) * EXAMPLE_LEN]);
            y.extend_from_slice(&self.labels[i * OUTPUTS..(i + 1) * OUTPUTS]);
        }
        let shape = [idx.len(), INPUT_SHAPE[0], INPUT_SHAPE[1], INPUT_SHAPE[2]];
        (Tensor4::from_vec(shape, x).expect("batch extents"), y)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Training-mode MSE of the initial network, averaged over one pass.
    pub initial_loss: f64,
    /// Mean mini-batch loss for each epoch, in order.
    pub loss_trace: Vec<f64>,
}

pub fn train(set: &TrainingSet, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(set, config, |_, _| {})
}

/// As [`train`], calling `on_epoch(epoch, loss)` after every epoch.
pub fn train_with(set: &TrainingSet, config: &TrainConfig, mut on_epoch: impl FnMut(usize, f64)) -> Result<TrainOutcome> {
    config.validate()?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 1));
    let mut params = NetworkParams::he_init(&mut init_rng);
    let mut adam = AdamState::new(params.n_learnable(), config.alpha);
    let n = set.len();
    let mut order: Vec<usize> = (0..n).collect();

    let mut initial_loss = 0.0;
    for idx in order.chunks(config.batch_size) {
        let (x, y) = set.batch(idx);
        let pred = forward(&params, &x, Mode::Train)?;
        initial_loss += mse_loss(&pred, &y, OUTPUTS)?.0 * idx.len() as f64;
    }
    initial_loss /= n as f64;

    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if epoch == config.decay_epoch() {
            adam.alpha = config.alpha * DECAY_FACTOR;
        }
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let (x, y) = set.batch(idx);
            let cache = forward_train(&params, &x)?;
            let (loss, dout) = mse_loss(&cache.output, &y, OUTPUTS)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    loss,
                    history: trace,
                });
            }
            let grads = backward(&params, &cache, &dout)?.flatten();
            let mut theta = params.flatten();
            adam.step(&mut theta, &grads)?;
            params.assign(&theta)?;
            let (c1, c2) = cache.bn_caches();
            params.bn1.update_running(c1);
            params.bn2.update_running(c2);
            total += loss * idx.len() as f64;
        }
        let epoch_loss = total / n as f64;
        trace.push(epoch_loss);
        on_epoch(epoch, epoch_loss);
    }
    Ok(TrainOutcome {
        params,
        initial_loss,
        loss_trace: trace,
    })
}

/// Inference-mode predictions for every example, `n × 3`.
pub fn predict(params: &NetworkParams, set_features: &[f64], batch_size: usize) -> Result<Vec<f64>> {
    if set_features.len() % EXAMPLE_LEN != 0 {
        return Err(Error::Shape(format!(
            "{} feature values are not a whole number of examples",
            set_features.len()
        )));
    }
    let n = set_features.len() / EXAMPLE_LEN;
    let mut out = Vec::with_capacity(n * OUTPUTS);
    for chunk in set_features.chunks(batch_size.max(1) * EXAMPLE_LEN) {
        let b = chunk.len() / EXAMPLE_LEN;
        let x = Tensor4::from_vec([b, INPUT_SHAPE[0], INPUT_SHAPE[1], INPUT_SHAPE[2]], chunk.to_vec())?;
        out.extend(forward(params, &x, Mode::Inference)?);
    }
    Ok(out)
}

/// Inference-mode MSE over a whole set.
pub fn evaluate_mse(params: &NetworkParams, set: &TrainingSet) -> Result<f64> {
    let pred = predict(params, &set.features, DEFAULT_BATCH_SIZE)?;
    Ok(mse_loss(&pred, &set.labels, OUTPUTS)?.0)
}
