use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::subsample::top_k;
use crate::error::{Error, Result};
use crate::sigstream::FrameBatch;

/// Neighbours per node in the Laplacian-score graph.
pub const LAPLACIAN_KNN: usize = 5;
/// Frames the Laplacian graph is built on at most.
pub const LAPLACIAN_MAX_FRAMES: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterMethod {
    Fisher,
    Laplacian,
}

impl fmt::Display for FilterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMethod::Fisher => "fisher",
            FilterMethod::Laplacian => "laplacian",
        })
    }
}

impl FromStr for FilterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fisher" => Ok(FilterMethod::Fisher),
            "laplacian" => Ok(FilterMethod::Laplacian),
            _ => Err(Error::InvalidInput(format!("unknown filter method {s:?}"))),
        }
    }
}

/// Per-feature filter scores and the per-sample combination
/// `score[I_j] + score[Q_j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScoreTable {
    pub method: FilterMethod,
    pub feature_scores: Vec<f64>,
    pub higher_is_better: bool,
    pub sample_scores: Vec<f64>,
    /// Features with no spread; they get the worst possible score.
    pub degenerate: Vec<usize>,
}

impl FeatureScoreTable {
    fn new(method: FilterMethod, feature_scores: Vec<f64>, degenerate: Vec<usize>) -> Self {
        let d = feature_scores.len() / 2;
        let sample_scores = (0..d)
            .map(|j| feature_scores[j] + feature_scores[d + j])
            .collect();
        FeatureScoreTable {
            method,
            higher_is_better: method == FilterMethod::Fisher,
            feature_scores,
            sample_scores,
            degenerate,
        }
    }

    /// The `k` best sample positions, ascending.
    pub fn top_k(&self, k: usize) -> Result<Vec<usize>> {
        top_k(&self.sample_scores, k, self.higher_is_better)
    }
}

/// Between-class over within-class scatter of each column of a row-major
/// `labels.len() x width` buffer.
pub fn fisher_feature_scores(x: &[f32], width: usize, labels: &[usize]) -> Result<Vec<f64>> {
    if x.len() != labels.len() * width {
        return Err(Error::Shape("feature buffer size".into()));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        groups.entry(y).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::InvalidInput("Fisher scores need at least two classes".into()));
    }
    let n = labels.len() as f64;
    let mut overall = vec![0.0; width];
    for row in x.chunks(width) {
        for (m, &v) in overall.iter_mut().zip(row) {
            *m += v as f64 / n;
        }
    }
    let mut num = vec![0.0; width];
    let mut den = vec![0.0; width];
    for rows in groups.values() {
        let ny = rows.len() as f64;
        let mut mu = vec![0.0; width];
        for &i in rows {
            for (m, &v) in mu.iter_mut().zip(&x[i * width..(i + 1) * width]) {
                *m += v as f64 / ny;
            }
        }
        let mut var = vec![0.0; width];
        for &i in rows {
            for ((s, &v), m) in var.iter_mut().zip(&x[i * width..(i + 1) * width]).zip(&mu) {
                let dv = v as f64 - m;
                *s += dv * dv / ny;
            }
        }
        for j in 0..width {
            num[j] += ny * (mu[j] - overall[j]).powi(2);
            den[j] += ny * var[j];
        }
    }
    Ok(num
        .into_iter()
        .zip(den)
        .map(|(a, b)| if a == 0.0 { 0.0 } else { a / b.max(1e-12) })
        .collect())
}

/// Laplacian scores over a symmetric k-nearest-neighbour graph with heat
/// kernel weights `exp(-dist^2 / t)`, `t` the squared median pairwise
/// distance. Lower is better; constant features score `+inf`.
pub fn laplacian_feature_scores(x: &[f32], width: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if width == 0 || !x.len().is_multiple_of(width) {
        return Err(Error::Shape("feature buffer size".into()));
    }
    let total = x.len() / width;
    if total < 2 {
        return Err(Error::InvalidInput("Laplacian scores need at least 2 frames".into()));
    }
    let stride = total.div_ceil(LAPLACIAN_MAX_FRAMES);
    let rows: Vec<&[f32]> = x.chunks(width).step_by(stride).collect();
    let n = rows.len();
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = rows[i]
                .iter()
                .zip(rows[j])
                .map(|(a, b)| {
                    let dv = (*a - *b) as f64;
                    dv * dv
                })
                .sum();
            dist[i * n + j] = s;
            dist[j * n + i] = s;
        }
    }
    let mut pairs: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| dist[i * n + j])
        .collect();
    let mid = pairs.len() / 2;
    let (_, med, _) = pairs.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let t = if *med > 0.0 { *med } else { 1.0 };
    let knn = LAPLACIAN_KNN.min(n - 1);
    let mut w = vec![0.0f64; n * n];
    for i in 0..n {
        let mut nb: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        nb.sort_by(|&a, &b| dist[i * n + a].total_cmp(&dist[i * n + b]).then(a.cmp(&b)));
        for &j in &nb[..knn] {
            let v = (-dist[i * n + j] / t).exp();
            w[i * n + j] = v;
            w[j * n + i] = v;
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| w[i * n..(i + 1) * n].iter().sum()).collect();
    let deg_sum: f64 = deg.iter().sum();
    let mut scores = Vec::with_capacity(width);
    let mut degenerate = Vec::new();
    for f in 0..width {
        let col: Vec<f64> = rows.iter().map(|r| r[f] as f64).collect();
        let centre = col.iter().zip(&deg).map(|(v, g)| v * g).sum::<f64>() / deg_sum;
        let den: f64 = col.iter().zip(&deg).map(|(v, g)| g * (v - centre).powi(2)).sum();
        if den <= 1e-12 {
            degenerate.push(f);
            scores.push(f64::INFINITY);
            continue;
        }
        let mut num = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let wij = w[i * n + j];
                if wij != 0.0 {
                    num += wij * (col[i] - col[j]).powi(2);
                }
            }
        }
        scores.push(num / den);
    }
    Ok((scores, degenerate))
}

pub fn filter_scores(batch: &FrameBatch, method: FilterMethod) -> Result<FeatureScoreTable> {
    let width = 2 * batch.d;
    match method {
        FilterMethod::Fisher => {
            let s = fisher_feature_scores(&batch.x, width, &batch.labels)?;
            Ok(FeatureScoreTable::new(method, s, Vec::new()))
        }
        FilterMethod::Laplacian => {
            let (s, deg) = laplacian_feature_scores(&batch.x, width)?;
            Ok(FeatureScoreTable::new(method, s, deg))
        }
    }
}
