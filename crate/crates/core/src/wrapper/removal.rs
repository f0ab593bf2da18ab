use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::classifiers::RankerModel;
use crate::error::{Error, Result};
use crate::sigstream::FrameBatch;

/// Accuracy of a ranker when one more sample position is zeroed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalScore {
    pub index: usize,
    pub accuracy: f64,
}

/// Ascending accuracy, then ascending index.
pub(crate) fn by_accuracy(a: &RemovalScore, b: &RemovalScore) -> Ordering {
    a.accuracy
        .total_cmp(&b.accuracy)
        .then(a.index.cmp(&b.index))
}

/// Positions of `[0, d)` not in `masked`, ascending.
pub(crate) fn unmasked(d: usize, masked: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; d];
    for &j in masked {
        if j >= d {
            return Err(Error::InvalidInput(format!("masked index {j} outside [0, {d})")));
        }
        if seen[j] {
            return Err(Error::InvalidInput(format!("index {j} masked twice")));
        }
        seen[j] = true;
    }
    Ok((0..d).filter(|&j| !seen[j]).collect())
}

/// Scores every unmasked position by the ranker's accuracy with that
/// position zeroed on top of `permanent`. The most important position (the
/// one whose loss hurts most) comes first.
pub fn removal_scores(
    ranker: &dyn RankerModel,
    batch: &FrameBatch,
    permanent: &[usize],
) -> Result<Vec<RemovalScore>> {
    let candidates = unmasked(batch.d, permanent)?;
    if candidates.is_empty() {
        return Err(Error::InvalidInput("every sample index is already masked".into()));
    }
    let acc = ranker.removal_accuracies(batch, permanent, &candidates)?;
    if acc.len() != candidates.len() {
        return Err(Error::Shape("ranker returned the wrong number of scores".into()));
    }
    let mut out: Vec<RemovalScore> = candidates
        .into_iter()
        .zip(acc)
        .map(|(index, accuracy)| RemovalScore { index, accuracy })
        .collect();
    out.sort_by(by_accuracy);
    Ok(out)
}
