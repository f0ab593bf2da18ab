use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{LayerSpec, Shape};
use super::masked::argmax;
use super::model::{Model, LOG_CLIP};
use super::optim::{adam_step, AdamState};
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Momentum of the batchnorm running statistics.
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            max_epochs: 30,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.batch_size == 0 {
            errs.push("batch_size must be positive".to_string());
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            errs.push("learning_rate must be positive".to_string());
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                errs.push(format!("{name} must lie in (0, 1)"));
            }
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            errs.push("adam_epsilon must be positive".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Borrowed example-major inputs with integer labels.
#[derive(Clone, Copy, Debug)]
pub struct Examples<'a, T> {
    pub x: &'a [T],
    pub labels: &'a [usize],
}

impl<'a, T> Examples<'a, T> {
    pub fn new(x: &'a [T], labels: &'a [usize]) -> Self {
        Examples { x, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    /// Epoch (1-based) whose parameters were kept; 0 means initialization.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Trained<T> {
    pub model: Model<T>,
    pub history: History,
}

/// Mean clipped cross-entropy and accuracy in inference mode.
pub fn loss_and_accuracy<T: Scalar>(model: &Model<T>, data: Examples<T>) -> Result<(f64, f64)> {
    let n = data.len();
    if n == 0 {
        return Err(Error::InvalidInput("no examples".into()));
    }
    let probs = model.predict_masked(data.x, n, &[])?;
    let k = model.output_width();
    let mut loss = 0.0;
    let mut hits = 0usize;
    for (row, &y) in probs.chunks(k).zip(data.labels) {
        loss -= row[y].to_f64().max(LOG_CLIP).ln();
        if argmax(row) == y {
            hits += 1;
        }
    }
    Ok((loss / n as f64, hits as f64 / n as f64))
}

/// Adam with early stopping on validation loss; returns the best
/// validation snapshot. With an empty validation set the epoch's mean
/// training loss stands in.
pub fn train<T: Scalar>(
    arch: Vec<LayerSpec>,
    input: Shape,
    train_set: Examples<T>,
    val_set: Examples<T>,
    cfg: &TrainConfig,
) -> Result<Trained<T>> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidInput("empty training split".into()));
    }
    let size = input.size();
    if train_set.x.len() != train_set.len() * size || val_set.x.len() != val_set.len() * size {
        return Err(Error::Shape("example buffers do not match the input shape".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::<T>::new(arch, input, &mut rng)?;
    let mut history = History::default();
    if cfg.max_epochs == 0 {
        history.seconds = start.elapsed().as_secs_f64();
        return Ok(Trained { model, history });
    }
    let mut adam = AdamState::new(&model.params.trainable);
    let mut best = model.params.clone();
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0usize;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut xb: Vec<T> = Vec::with_capacity(cfg.batch_size * size);
    let mut yb: Vec<usize> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(&train_set.x[i * size..(i + 1) * size]);
                yb.push(train_set.labels[i]);
            }
            let lg = model.loss_and_grad(&xb, &yb)?;
            if !lg.loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: lg.loss,
                });
            }
            adam_step(&mut model.params.trainable, &lg.grads, &mut adam, cfg)?;
            model.update_running_stats(&lg.bn_stats, BN_MOMENTUM);
            sum += lg.loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = sum / seen as f64;
        let (val_loss, val_acc) = if val_set.is_empty() {
            (train_loss, f64::NAN)
        } else {
            loss_and_accuracy(&model, val_set)?
        };
        if !val_loss.is_finite() || !model.params.trainable.all_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: val_loss,
            });
        }
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);
        history.val_accuracy.push(val_acc);
        history.epochs_run = epoch;
        if val_loss < best_loss {
            best_loss = val_loss;
            best = model.params.clone();
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    model.params = best;
    history.seconds = start.elapsed().as_secs_f64();
    Ok(Trained { model, history })
}
