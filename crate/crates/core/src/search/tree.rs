//! Depth-first search over an implicit tree whose children at each node are
//! the top holistic candidates under that node's mask.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::classifiers::RankerModel;
use crate::error::{Error, Result};
use crate::sigstream::FrameBatch;
use crate::wrapper::holistic::{check_rankers, holistic_ranking};

/// Trains and scores a classifier on a subset of sample positions.
pub trait LeafTrainer: Sync {
    /// Validation accuracy at `snr_db` of a classifier fed only the
    /// positions in `keep` (ascending).
    fn leaf_accuracy(&self, snr_db: i16, keep: &[usize]) -> Result<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub d: usize,
    pub k: usize,
    /// Fraction of candidates branched on at each depth.
    pub epsilon: f64,
    pub prev_snr_acc: f64,
    /// Leaves trained before giving up.
    pub leaf_budget: usize,
}

pub const DEFAULT_LEAF_BUDGET: usize = 4096;

impl SearchConfig {
    /// `max(1, floor(epsilon d))`, robust to `epsilon = m/d` rounding.
    pub fn arity(&self) -> usize {
        ((self.epsilon * self.d as f64 + 1e-9).floor() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.k == 0 || self.k > self.d {
            errs.push(format!("k={} must lie in [1, d={}]", self.k, self.d));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            errs.push("epsilon must lie in (0, 1]".to_string());
        } else if self.epsilon * (self.d as f64) + 1e-9 < 1.0 {
            errs.push("epsilon * d must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.prev_snr_acc) {
            errs.push("prev_snr_acc must lie in [0, 1]".to_string());
        }
        if self.leaf_budget == 0 {
            errs.push("leaf_budget must be positive".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// A scored leaf: positions in selection order and validation accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub indices: Vec<usize>,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchResult {
    Found(Leaf),
    /// Tree or budget exhausted; carries the best leaf visited.
    NotFound { best: Option<Leaf> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub leaves_visited: usize,
    /// Child position taken at each depth, per visited leaf, in visit order.
    pub leaf_paths: Vec<Vec<usize>>,
    pub rankings_computed: usize,
    pub leaves_trained: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub result: SearchResult,
    pub stats: SearchStats,
}

/// Search state for one SNR. Rankings and leaf accuracies are memoized, so
/// repeated searches at growing epsilon reuse earlier work.
pub struct Searcher<'a> {
    snr_db: i16,
    batch: &'a FrameBatch,
    rankers: &'a [&'a dyn RankerModel],
    trainer: &'a dyn LeafTrainer,
    rankings: HashMap<Vec<usize>, Vec<usize>>,
    leaves: HashMap<Vec<usize>, f64>,
}

impl<'a> Searcher<'a> {
    pub fn new(
        snr_db: i16,
        batch: &'a FrameBatch,
        rankers: &'a [&'a dyn RankerModel],
        trainer: &'a dyn LeafTrainer,
    ) -> Result<Self> {
        check_rankers(rankers)?;
        Ok(Searcher {
            snr_db,
            batch,
            rankers,
            trainer,
            rankings: HashMap::new(),
            leaves: HashMap::new(),
        })
    }

    fn ranking(&mut self, k: usize, path: &[usize], stats: &mut SearchStats) -> Result<Vec<usize>> {
        let mut key = path.to_vec();
        key.sort_unstable();
        if let Some(r) = self.rankings.get(&key) {
            return Ok(r.clone());
        }
        let r = holistic_ranking(self.batch, self.rankers, path, k - path.len())?.order;
        stats.rankings_computed += 1;
        self.rankings.insert(key, r.clone());
        Ok(r)
    }

    fn leaf(&mut self, path: &[usize], stats: &mut SearchStats) -> Result<f64> {
        let mut keep = path.to_vec();
        keep.sort_unstable();
        if let Some(&a) = self.leaves.get(&keep) {
            return Ok(a);
        }
        let a = self.trainer.leaf_accuracy(self.snr_db, &keep)?;
        stats.leaves_trained += 1;
        self.leaves.insert(keep, a);
        Ok(a)
    }

    /// Left-to-right depth-first traversal; the first leaf whose accuracy
    /// exceeds `prev_snr_acc` is returned.
    pub fn run(&mut self, cfg: &SearchConfig) -> Result<SearchOutcome> {
        cfg.validate()?;
        if cfg.d != self.batch.d {
            return Err(Error::Shape(format!(
                "search over d={} but frames have {} samples",
                cfg.d, self.batch.d
            )));
        }
        let mut stats = SearchStats::default();
        let mut best: Option<Leaf> = None;
        let mut path = Vec::with_capacity(cfg.k);
        let mut labels = Vec::with_capacity(cfg.k);
        let found = self.descend(cfg, &mut path, &mut labels, &mut stats, &mut best)?;
        let result = match found {
            Some(leaf) => SearchResult::Found(leaf),
            None => SearchResult::NotFound { best },
        };
        Ok(SearchOutcome { result, stats })
    }

    fn descend(
        &mut self,
        cfg: &SearchConfig,
        path: &mut Vec<usize>,
        labels: &mut Vec<usize>,
        stats: &mut SearchStats,
        best: &mut Option<Leaf>,
    ) -> Result<Option<Leaf>> {
        if path.len() == cfg.k {
            let accuracy = self.leaf(path, stats)?;
            stats.leaves_visited += 1;
            stats.leaf_paths.push(labels.clone());
            let leaf = Leaf {
                indices: path.clone(),
                accuracy,
            };
            if best.as_ref().is_none_or(|b| accuracy > b.accuracy) {
                *best = Some(leaf.clone());
            }
            return Ok((accuracy > cfg.prev_snr_acc).then_some(leaf));
        }
        let order = self.ranking(cfg.k, path, stats)?;
        for (pos, &j) in order.iter().take(cfg.arity()).enumerate() {
            if stats.leaves_visited >= cfg.leaf_budget {
                break;
            }
            path.push(j);
            labels.push(pos);
            let r = self.descend(cfg, path, labels, stats, best)?;
            path.pop();
            labels.pop();
            if r.is_some() {
                return Ok(r);
            }
        }
        Ok(None)
    }
}

/// One search at a fixed epsilon.
pub fn epsilon_greedy(
    cfg: &SearchConfig,
    snr_db: i16,
    batch: &FrameBatch,
    rankers: &[&dyn RankerModel],
    trainer: &dyn LeafTrainer,
) -> Result<SearchOutcome> {
    Searcher::new(snr_db, batch, rankers, trainer)?.run(cfg)
}
