use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::removal::{removal_scores, RemovalScore};
use super::subnet::{check_k, SelectionResult, SelectionStep};
use crate::classifiers::RankerModel;
use crate::error::{Error, Result};
use crate::sigstream::FrameBatch;

/// Candidates partitioned by how many rankers proposed them. Each entry is
/// `(index, priority)`, sorted by ascending priority then index.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TierTable {
    pub tier1: Vec<(usize, f64)>,
    pub tier2: Vec<(usize, f64)>,
    pub tier3: Vec<(usize, f64)>,
}

impl TierTable {
    /// The first entry of the highest non-empty tier, with its tier number.
    pub fn head(&self) -> Option<(u8, usize, f64)> {
        [(1, &self.tier1), (2, &self.tier2), (3, &self.tier3)]
            .into_iter()
            .find_map(|(t, v)| v.first().map(|&(i, p)| (t, i, p)))
    }

    /// All entries, tier by tier.
    pub fn ordered(&self) -> impl Iterator<Item = (u8, usize, f64)> + '_ {
        self.tier1
            .iter()
            .map(|&(i, p)| (1, i, p))
            .chain(self.tier2.iter().map(|&(i, p)| (2, i, p)))
            .chain(self.tier3.iter().map(|&(i, p)| (3, i, p)))
    }
}

fn sort_tier(v: &mut [(usize, f64)]) {
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
}

/// Splits the union of three candidate sets by membership count. An
/// entry's priority is the sum of removal accuracies reported by the
/// rankers whose set contains it.
pub fn tier_divide(sets: [&[usize]; 3], scores: [&[RemovalScore]; 3]) -> TierTable {
    let lookup: Vec<BTreeMap<usize, f64>> = scores
        .iter()
        .map(|s| s.iter().map(|r| (r.index, r.accuracy)).collect())
        .collect();
    let mut owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (r, set) in sets.iter().enumerate() {
        for &j in *set {
            let o = owners.entry(j).or_default();
            if !o.contains(&r) {
                o.push(r);
            }
        }
    }
    let mut t = TierTable::default();
    for (j, o) in owners {
        let p: f64 = o.iter().map(|&r| lookup[r].get(&j).copied().unwrap_or(0.0)).sum();
        match o.len() {
            3 => t.tier1.push((j, p)),
            2 => t.tier2.push((j, p)),
            _ => t.tier3.push((j, p)),
        }
    }
    sort_tier(&mut t.tier1);
    sort_tier(&mut t.tier2);
    sort_tier(&mut t.tier3);
    t
}

/// One holistic ranking pass under a permanent mask.
#[derive(Clone, Debug, PartialEq)]
pub struct HolisticRanking {
    pub table: TierTable,
    /// Every unmasked position: the tiers in order, then positions no
    /// ranker proposed, by ascending summed accuracy over all rankers.
    pub order: Vec<usize>,
}

pub(crate) fn check_rankers(rankers: &[&dyn RankerModel]) -> Result<()> {
    if rankers.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "holistic selection needs exactly 3 rankers, got {}",
            rankers.len()
        )));
    }
    Ok(())
}

/// Each ranker proposes its `budget` most important unmasked positions;
/// the proposals are tiered.
pub fn holistic_ranking(
    batch: &FrameBatch,
    rankers: &[&dyn RankerModel],
    permanent: &[usize],
    budget: usize,
) -> Result<HolisticRanking> {
    check_rankers(rankers)?;
    let scores: Vec<Vec<RemovalScore>> = rankers
        .iter()
        .map(|r| removal_scores(*r, batch, permanent))
        .collect::<Result<_>>()?;
    let sets: Vec<Vec<usize>> = scores
        .iter()
        .map(|s| s.iter().take(budget).map(|r| r.index).collect())
        .collect();
    let table = tier_divide(
        [&sets[0], &sets[1], &sets[2]],
        [&scores[0], &scores[1], &scores[2]],
    );
    let mut order: Vec<usize> = table.ordered().map(|(_, i, _)| i).collect();
    let mut total: BTreeMap<usize, f64> = BTreeMap::new();
    for s in &scores {
        for r in s {
            *total.entry(r.index).or_default() += r.accuracy;
        }
    }
    let mut rest: Vec<(usize, f64)> = total
        .into_iter()
        .filter(|(j, _)| !order.contains(j))
        .collect();
    sort_tier(&mut rest);
    order.extend(rest.into_iter().map(|(j, _)| j));
    Ok(HolisticRanking { table, order })
}

/// Ensemble selection: at step `t` the three rankers each propose `k - t`
/// candidates under the grown mask and the head of the best tier wins.
pub fn holistic_select(
    k: usize,
    batch: &FrameBatch,
    rankers: &[&dyn RankerModel],
) -> Result<SelectionResult> {
    check_rankers(rankers)?;
    check_k(k, batch.d)?;
    let mut res = SelectionResult {
        indices: Vec::with_capacity(k),
        steps: Vec::with_capacity(k),
    };
    while res.indices.len() < k {
        let budget = k - res.indices.len();
        let r = holistic_ranking(batch, rankers, &res.indices, budget)?;
        let (tier, j, p) = r.table.head().expect("budget >= 1 gives a candidate");
        res.indices.push(j);
        res.steps.push(SelectionStep {
            tier: Some(tier),
            priority: p,
        });
    }
    Ok(res)
}
