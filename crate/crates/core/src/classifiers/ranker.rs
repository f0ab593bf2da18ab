use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::neurokit::{self, Examples, History, Model, Shape, TrainConfig};
use crate::sigstream::FrameBatch;

use super::arch::ArchKind;

/// A trained classifier that reports accuracy with any set of sample
/// positions zeroed (both I and Q).
pub trait RankerModel: Sync {
    /// Samples per frame the ranker expects.
    fn samples(&self) -> usize;

    fn masked_accuracy(&self, batch: &FrameBatch, masked: &[usize]) -> Result<f64>;

    /// `masked_accuracy(batch, permanent ∪ {j})` for every candidate `j`.
    fn removal_accuracies(
        &self,
        batch: &FrameBatch,
        permanent: &[usize],
        candidates: &[usize],
    ) -> Result<Vec<f64>> {
        let mut mask = permanent.to_vec();
        candidates
            .iter()
            .map(|&j| {
                mask.push(j);
                let a = self.masked_accuracy(batch, &mask);
                mask.pop();
                a
            })
            .collect()
    }
}

/// A classifier exposing class probabilities under a mask.
pub trait MaskedClassifier: Sync {
    fn samples(&self) -> usize;

    fn classes(&self) -> usize;

    /// Row-major `[frame][class]` probabilities.
    fn masked_probabilities(&self, batch: &FrameBatch, masked: &[usize]) -> Result<Vec<f64>>;
}

impl<R: RankerModel + ?Sized> RankerModel for &R {
    fn samples(&self) -> usize {
        (**self).samples()
    }

    fn masked_accuracy(&self, batch: &FrameBatch, masked: &[usize]) -> Result<f64> {
        (**self).masked_accuracy(batch, masked)
    }

    fn removal_accuracies(
        &self,
        batch: &FrameBatch,
        permanent: &[usize],
        candidates: &[usize],
    ) -> Result<Vec<f64>> {
        (**self).removal_accuracies(batch, permanent, candidates)
    }
}

/// A neural ranker trained on SNR-pooled frames.
#[derive(Clone, Debug)]
pub struct NeuralRanker {
    pub kind: ArchKind,
    pub model: Model<f32>,
    pub history: History,
    /// Validation accuracy per SNR after training.
    pub val_accuracy: BTreeMap<i16, f64>,
}

fn check_width(batch: &FrameBatch, d: usize) -> Result<()> {
    if batch.d != d {
        return Err(Error::Shape(format!(
            "frames have {} samples, model expects {d}",
            batch.d
        )));
    }
    Ok(())
}

impl NeuralRanker {
    pub fn from_model(kind: ArchKind, model: Model<f32>) -> Result<Self> {
        match model.input_shape() {
            Shape::Seq { channels: 2, .. } => Ok(NeuralRanker {
                kind,
                model,
                history: History::default(),
                val_accuracy: BTreeMap::new(),
            }),
            other => Err(Error::Shape(format!("ranker input must be 2 x d, got {other:?}"))),
        }
    }

    pub fn accuracy_by_snr(&self, batch: &FrameBatch) -> Result<BTreeMap<i16, f64>> {
        batch
            .by_snr()
            .into_iter()
            .map(|(s, b)| Ok((s, self.masked_accuracy(&b, &[])?)))
            .collect()
    }
}

/// Trains a ranker of `kind` on `train`, early-stopping on `val`.
pub fn make_ranker(
    kind: ArchKind,
    train: &FrameBatch,
    val: &FrameBatch,
    cfg: &TrainConfig,
) -> Result<NeuralRanker> {
    if train.d != val.d {
        return Err(Error::Shape("train and validation widths differ".into()));
    }
    let d = train.d;
    let out = neurokit::train(
        kind.layers(d),
        Shape::Seq { channels: 2, len: d },
        Examples::new(&train.x, &train.labels),
        Examples::new(&val.x, &val.labels),
        cfg,
    )?;
    let mut r = NeuralRanker::from_model(kind, out.model)?;
    r.history = out.history;
    if !val.is_empty() {
        r.val_accuracy = r.accuracy_by_snr(val)?;
    }
    Ok(r)
}

impl RankerModel for NeuralRanker {
    fn samples(&self) -> usize {
        match self.model.input_shape() {
            Shape::Seq { len, .. } => len,
            Shape::Flat(n) => n,
        }
    }

    fn masked_accuracy(&self, batch: &FrameBatch, masked: &[usize]) -> Result<f64> {
        check_width(batch, RankerModel::samples(self))?;
        self.model.evaluate(&batch.x, &batch.labels, masked)
    }

    fn removal_accuracies(
        &self,
        batch: &FrameBatch,
        permanent: &[usize],
        candidates: &[usize],
    ) -> Result<Vec<f64>> {
        check_width(batch, RankerModel::samples(self))?;
        self.model
            .removal_accuracies(&batch.x, &batch.labels, permanent, candidates)
    }
}

impl MaskedClassifier for NeuralRanker {
    fn samples(&self) -> usize {
        RankerModel::samples(self)
    }

    fn classes(&self) -> usize {
        self.model.output_width()
    }

    fn masked_probabilities(&self, batch: &FrameBatch, masked: &[usize]) -> Result<Vec<f64>> {
        check_width(batch, RankerModel::samples(self))?;
        Ok(self
            .model
            .predict_masked(&batch.x, batch.len(), masked)?
            .into_iter()
            .map(f64::from)
            .collect())
    }
}
