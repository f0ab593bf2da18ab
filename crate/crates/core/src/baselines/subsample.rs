use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub(crate) fn check_k(d: usize, k: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!("k must lie in [1, {d}], got {k}")));
    }
    Ok(())
}

/// Every `d/k`-th position: `floor(j d / k)` for `j < k`.
pub fn uniform_indices(d: usize, k: usize) -> Result<Vec<usize>> {
    check_k(d, k)?;
    Ok((0..k).map(|j| j * d / k).collect())
}

/// `k` distinct positions drawn uniformly without replacement, ascending.
pub fn random_indices(d: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(d, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = rand::seq::index::sample(&mut rng, d, k).into_vec();
    v.sort_unstable();
    Ok(v)
}

/// The `k` largest-magnitude samples of one `2 x d` frame (ties to the
/// lower index), ascending.
pub fn magnitude_indices(frame: &[f32], k: usize) -> Result<Vec<usize>> {
    if !frame.len().is_multiple_of(2) {
        return Err(Error::Shape("a frame holds an I row and a Q row".into()));
    }
    let d = frame.len() / 2;
    check_k(d, k)?;
    let mag: Vec<f32> = (0..d).map(|j| frame[j].hypot(frame[d + j])).collect();
    top_k(&mag.iter().map(|&m| m as f64).collect::<Vec<_>>(), k, true)
}

/// Indices of the `k` best scores, ascending. Ties go to the lower index.
pub fn top_k(scores: &[f64], k: usize, higher_is_better: bool) -> Result<Vec<usize>> {
    check_k(scores.len(), k)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = scores[a].total_cmp(&scores[b]);
        let o = if higher_is_better { o.reverse() } else { o };
        o.then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}
