//! Synthetic problems with a known answer for the filter and FQI baselines.

use amc_subsample::classifiers::MaskedClassifier;
use amc_subsample::sigstream::FrameBatch;
use amc_subsample::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const PLANTED_FEATURE: usize = 7;

/// Feature 7 of 32 carries the label; the others are noise.
pub fn planted(seed: u64, n: usize) -> (Vec<f32>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * 32);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        for f in 0..32 {
            let z: f64 = rng.sample(StandardNormal);
            x.push(if f == PLANTED_FEATURE { label as f64 * 3.0 + z } else { z } as f32);
        }
        y.push(label);
    }
    (x, y)
}

pub fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

/// Softmax of a linear map of the flattened frame.
pub struct LinearSoftmax {
    pub d: usize,
    pub classes: usize,
    /// `[class][2d]`.
    pub w: Vec<Vec<f64>>,
}

impl LinearSoftmax {
    pub fn probs(&self, f: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = self.w.iter().map(|w| w.iter().zip(f).map(|(a, b)| a * b).sum()).collect();
        let m = z.iter().cloned().fold(f64::MIN, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }
}

impl MaskedClassifier for LinearSoftmax {
    fn samples(&self) -> usize {
        self.d
    }

    fn classes(&self) -> usize {
        self.classes
    }

    fn masked_probabilities(&self, batch: &FrameBatch, masked: &[usize]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for i in 0..batch.len() {
            let mut f: Vec<f64> = batch.frame(i).iter().map(|&v| v as f64).collect();
            for &j in masked {
                f[j] = 0.0;
                f[self.d + j] = 0.0;
            }
            out.extend(self.probs(&f));
        }
        Ok(out)
    }
}

/// A model that ignores sample 2 entirely, on two frames of width 4.
pub fn dead_input_case() -> (LinearSoftmax, FrameBatch) {
    let d = 4;
    let mut w = vec![vec![0.0; 2 * d]; 2];
    w[0][0] = 1.0;
    w[1][1] = -0.5;
    w[0][d + 1] = 0.25;
    w[1][3] = 2.0;
    w[0][d + 3] = -1.0;
    let frames = [
        [0.5f32, 1.0, 3.0, -1.0, 0.0, 2.0, -3.0, 0.5],
        [-1.0, 0.0, 1.0, 1.0, 1.0, -1.0, 2.0, 0.0],
    ];
    let batch = FrameBatch {
        d,
        x: frames.iter().flatten().copied().collect(),
        labels: vec![0, 1],
        snrs: vec![0, 0],
    };
    (LinearSoftmax { d, classes: 2, w }, batch)
}
