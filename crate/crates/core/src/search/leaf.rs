use std::collections::BTreeMap;

use crate::classifiers::ArchKind;
use crate::error::{Error, Result};
use crate::neurokit::{self, Examples, Shape, TrainConfig};
use crate::sigstream::FrameBatch;

use super::tree::LeafTrainer;

/// Trains a fresh reduced-width MiniResNet per leaf on the SNR's training
/// frames and reports its validation accuracy.
pub struct NeuralLeafTrainer {
    pub train: BTreeMap<i16, FrameBatch>,
    pub val: BTreeMap<i16, FrameBatch>,
    pub cfg: TrainConfig,
}

impl NeuralLeafTrainer {
    /// A short budget: at most 8 epochs with patience 3.
    pub fn default_config(seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: 8,
            patience: 3,
            seed,
            ..TrainConfig::default()
        }
    }
}

impl LeafTrainer for NeuralLeafTrainer {
    fn leaf_accuracy(&self, snr_db: i16, keep: &[usize]) -> Result<f64> {
        let missing = || Error::InvalidInput(format!("no frames at SNR {snr_db} dB"));
        let tr = self.train.get(&snr_db).ok_or_else(missing)?.keep_samples(keep)?;
        let va = self.val.get(&snr_db).ok_or_else(missing)?.keep_samples(keep)?;
        let k = keep.len();
        let out = neurokit::train(
            ArchKind::MiniResNet.layers(k),
            Shape::Seq { channels: 2, len: k },
            Examples::new(&tr.x, &tr.labels),
            Examples::new(&va.x, &va.labels),
            &self.cfg,
        )?;
        out.model.evaluate(&va.x, &va.labels, &[])
    }
}
