use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::subsample::top_k;
use crate::error::{Error, Result};

/// Principal axes of a feature set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Unit-norm principal directions, one per entry, by descending
    /// eigenvalue.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    /// Eigen-decomposition of the sample covariance of the row-major
    /// `rows x width` buffer.
    pub fn fit(x: &[f32], width: usize) -> Result<Self> {
        if width == 0 || !x.len().is_multiple_of(width) || x.len() / width < 2 {
            return Err(Error::InvalidInput("PCA needs at least 2 frames".into()));
        }
        let n = x.len() / width;
        let mut mean = vec![0.0; width];
        for row in x.chunks(width) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered = DMatrix::from_fn(n, width, |i, j| x[i * width + j] as f64 - mean[j]);
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..width).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let components = order
            .iter()
            .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
            .collect();
        let eigenvalues = order.iter().map(|&c| eig.eigenvalues[c].max(0.0)).collect();
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, row: &[f32]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row)
                    .zip(&self.mean)
                    .map(|((w, &v), m)| w * (v as f64 - m))
                    .sum()
            })
            .collect()
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, a) in self.components.iter().zip(coeffs) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += a * w;
            }
        }
        out
    }

    /// Largest `|<c_i, c_j> - delta_ij|` over component pairs.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.components.iter().enumerate() {
            for (j, b) in self.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Per sample position: eigenvalue-weighted absolute loadings of its I
    /// and Q features summed over all components.
    pub fn sample_scores(&self) -> Vec<f64> {
        let d = self.width() / 2;
        (0..d)
            .map(|j| {
                self.components
                    .iter()
                    .zip(&self.eigenvalues)
                    .map(|(c, l)| l * (c[j].abs() + c[d + j].abs()))
                    .sum()
            })
            .collect()
    }
}

/// PCA over training frames (`rows x 2d`) and the `k` positions with the
/// largest aggregate loading, ascending.
pub fn pcs_indices(x: &[f32], d: usize, k: usize) -> Result<(PcaModel, Vec<usize>)> {
    let pca = PcaModel::fit(x, 2 * d)?;
    let idx = top_k(&pca.sample_scores(), k, true)?;
    Ok((pca, idx))
}
