//! Deterministic stand-ins for trained rankers and leaf trainers.

use amc_subsample::classifiers::RankerModel;
use amc_subsample::search::LeafTrainer;
use amc_subsample::sigstream::FrameBatch;
use amc_subsample::Result;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Accuracy is a fixed pseudo-random function of the masked set, quantized
/// to `levels` values so that ties occur.
#[derive(Clone, Copy, Debug)]
pub struct HashRanker {
    pub seed: u64,
    pub d: usize,
    pub levels: u64,
}

impl HashRanker {
    pub fn new(seed: u64, d: usize) -> Self {
        HashRanker { seed, d, levels: 7 }
    }

    pub fn accuracy_of(&self, masked: &[usize]) -> f64 {
        let mut m = masked.to_vec();
        m.sort_unstable();
        let h = m.iter().fold(mix(self.seed), |h, &j| mix(h ^ (j as u64 + 1)));
        (h % self.levels) as f64 / self.levels as f64
    }
}

impl RankerModel for HashRanker {
    fn samples(&self) -> usize {
        self.d
    }

    fn masked_accuracy(&self, _batch: &FrameBatch, masked: &[usize]) -> Result<f64> {
        Ok(self.accuracy_of(masked))
    }
}

/// A frame batch whose contents stubs ignore.
pub fn blank_batch(d: usize, snr: i16) -> FrameBatch {
    FrameBatch {
        d,
        x: vec![0.0; 4 * 2 * d],
        labels: vec![0; 4],
        snrs: vec![snr; 4],
    }
}

/// Leaf accuracy a pseudo-random function of the kept set.
#[derive(Clone, Copy, Debug)]
pub struct HashLeaf {
    pub seed: u64,
}

impl LeafTrainer for HashLeaf {
    fn leaf_accuracy(&self, snr_db: i16, keep: &[usize]) -> Result<f64> {
        let h = keep
            .iter()
            .fold(mix(self.seed ^ snr_db as u64), |h, &j| mix(h ^ (j as u64 + 1)));
        Ok((h % 1000) as f64 / 1000.0)
    }
}

/// Every leaf scores the same.
#[derive(Clone, Copy, Debug)]
pub struct ConstLeaf(pub f64);

impl LeafTrainer for ConstLeaf {
    fn leaf_accuracy(&self, _snr_db: i16, _keep: &[usize]) -> Result<f64> {
        Ok(self.0)
    }
}
