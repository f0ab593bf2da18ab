use serde::{Deserialize, Serialize};

use super::removal::removal_scores;
use crate::classifiers::RankerModel;
use crate::error::{Error, Result};
use crate::sigstream::FrameBatch;

/// Diagnostics for one selection step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    /// Tier the choice came from (holistic selection only).
    pub tier: Option<u8>,
    /// Removal accuracy, or for holistic selection the summed priority.
    pub priority: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected positions in selection order.
    pub indices: Vec<usize>,
    pub steps: Vec<SelectionStep>,
}

pub(crate) fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!("k must lie in [1, {d}], got {k}")));
    }
    Ok(())
}

/// Greedy wrapper selection with one ranker: each step zeroes the position
/// whose removal costs the most accuracy, keeps it zeroed and records it.
pub fn subsampler_net(
    k: usize,
    batch: &FrameBatch,
    ranker: &dyn RankerModel,
) -> Result<SelectionResult> {
    check_k(k, batch.d)?;
    let mut res = SelectionResult {
        indices: Vec::with_capacity(k),
        steps: Vec::with_capacity(k),
    };
    while res.indices.len() < k {
        let scores = removal_scores(ranker, batch, &res.indices)?;
        let best = scores[0];
        res.indices.push(best.index);
        res.steps.push(SelectionStep {
            tier: None,
            priority: best.accuracy,
        });
    }
    Ok(res)
}
