use crate::classifiers::MaskedClassifier;
use crate::error::{Error, Result};
use crate::sigstream::FrameBatch;

use super::subsample::top_k;

/// Output sensitivity per sample position: the mean over frames of the
/// squared change in class probabilities when that position is zeroed.
pub fn fqi_scores(model: &dyn MaskedClassifier, batch: &FrameBatch) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("no frames".into()));
    }
    let base = model.masked_probabilities(batch, &[])?;
    let n = batch.len() as f64;
    (0..batch.d)
        .map(|j| {
            let p = model.masked_probabilities(batch, &[j])?;
            Ok(base
                .iter()
                .zip(&p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n)
        })
        .collect()
}

/// The `k` most sensitive positions, ascending.
pub fn fqi_indices(model: &dyn MaskedClassifier, batch: &FrameBatch, k: usize) -> Result<Vec<usize>> {
    top_k(&fqi_scores(model, batch)?, k, true)
}
