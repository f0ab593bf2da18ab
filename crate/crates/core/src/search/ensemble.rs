use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::plan::SelectionPlan;
use super::tree::{Leaf, LeafTrainer, SearchConfig, SearchResult, SearchStats, Searcher};
use crate::classifiers::RankerModel;
use crate::error::{Error, Result};
use crate::sigstream::FrameBatch;

/// What happened at one SNR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSearchLog {
    pub snr_db: i16,
    /// `(epsilon, stats)` per search call, in order.
    pub attempts: Vec<(f64, SearchStats)>,
    pub accepted: Leaf,
    pub missed: bool,
}

/// Runs the epsilon search SNR by SNR in ascending order. Each SNR starts
/// at `epsilon = 1/d` and doubles on failure up to 1; the bar is the
/// accuracy accepted at the previous SNR (0 for the first). When even
/// `epsilon = 1` fails, the best leaf seen is accepted and the SNR flagged.
pub fn ensemble_subsample_logged(
    k: usize,
    per_snr: &BTreeMap<i16, FrameBatch>,
    rankers: &[&dyn RankerModel],
    trainer: &dyn LeafTrainer,
    leaf_budget: usize,
) -> Result<(SelectionPlan, Vec<SnrSearchLog>)> {
    let d = per_snr
        .values()
        .next()
        .map(|b| b.d)
        .ok_or_else(|| Error::InvalidInput("no SNR partitions".into()))?;
    if per_snr.values().any(|b| b.d != d) {
        return Err(Error::Shape("SNR partitions disagree on d".into()));
    }
    let mut plan = SelectionPlan::new(d, k).with_method("ensemble");
    let mut logs = Vec::new();
    let mut prev = 0.0;
    for (&snr, batch) in per_snr {
        let mut searcher = Searcher::new(snr, batch, rankers, trainer)?;
        let mut eps = 1.0 / d as f64;
        let mut attempts = Vec::new();
        let mut best: Option<Leaf> = None;
        let (leaf, missed) = loop {
            let cfg = SearchConfig {
                d,
                k,
                epsilon: eps,
                prev_snr_acc: prev,
                leaf_budget,
            };
            let out = searcher.run(&cfg)?;
            attempts.push((eps, out.stats));
            match out.result {
                SearchResult::Found(leaf) => break (leaf, false),
                SearchResult::NotFound { best: b } => {
                    if let Some(b) = b {
                        if best.as_ref().is_none_or(|cur| b.accuracy > cur.accuracy) {
                            best = Some(b);
                        }
                    }
                    if eps >= 1.0 {
                        let leaf = best.take().expect("a positive budget visits a leaf");
                        break (leaf, true);
                    }
                    eps = (2.0 * eps).min(1.0);
                }
            }
        };
        prev = leaf.accuracy;
        plan.per_snr.insert(snr, leaf.indices.clone());
        plan.epsilon_used.insert(snr, eps);
        plan.val_acc.insert(snr, leaf.accuracy);
        if missed {
            plan.missed.push(snr);
        }
        logs.push(SnrSearchLog {
            snr_db: snr,
            attempts,
            accepted: leaf,
            missed,
        });
    }
    Ok((plan, logs))
}

pub fn ensemble_subsample(
    k: usize,
    per_snr: &BTreeMap<i16, FrameBatch>,
    rankers: &[&dyn RankerModel],
    trainer: &dyn LeafTrainer,
    leaf_budget: usize,
) -> Result<SelectionPlan> {
    ensemble_subsample_logged(k, per_snr, rankers, trainer, leaf_budget).map(|(p, _)| p)
}
