//! Straightforward re-implementations used as references.

use amc_subsample::classifiers::RankerModel;
use amc_subsample::sigstream::FrameBatch;

fn removal_table(r: &dyn RankerModel, batch: &FrameBatch, masked: &[usize]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = (0..batch.d)
        .filter(|j| !masked.contains(j))
        .map(|j| {
            let mut m = masked.to_vec();
            m.push(j);
            (j, r.masked_accuracy(batch, &m).unwrap())
        })
        .collect();
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

/// Sequential greedy: repeatedly take the position whose extra removal
/// gives the lowest accuracy (lowest index on ties).
pub fn greedy_oracle(k: usize, batch: &FrameBatch, r: &dyn RankerModel) -> Vec<usize> {
    let mut chosen = Vec::new();
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..batch.d {
            if chosen.contains(&j) {
                continue;
            }
            let mut m = chosen.clone();
            m.push(j);
            let a = r.masked_accuracy(batch, &m).unwrap();
            if best.is_none_or(|(_, b)| a < b) {
                best = Some((j, a));
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen
}

/// Tiered ensemble selection written out directly.
pub fn holistic_oracle(k: usize, batch: &FrameBatch, rs: &[&dyn RankerModel]) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < k {
        let budget = k - chosen.len();
        let tables: Vec<Vec<(usize, f64)>> =
            rs.iter().map(|r| removal_table(*r, batch, &chosen)).collect();
        let mut best: Option<(usize, f64, usize)> = None; // (members, priority, index)
        for j in 0..batch.d {
            let mut members = 0;
            let mut prio = 0.0;
            for t in &tables {
                if let Some(&(_, a)) = t.iter().take(budget).find(|e| e.0 == j) {
                    members += 1;
                    prio += a;
                }
            }
            if members == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((m, p, _)) => members > m || (members == m && prio < p),
            };
            if better {
                best = Some((members, prio, j));
            }
        }
        chosen.push(best.unwrap().2);
    }
    chosen
}
