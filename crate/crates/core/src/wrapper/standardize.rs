use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigstream::LabeledDataset;

/// Smallest standard deviation used for scaling.
pub const STD_FLOOR: f64 = 1e-6;

/// Per-feature z-scoring parameters for the `2d` real features of a frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizeStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features whose spread fell below [`STD_FLOOR`].
    pub floored: Vec<usize>,
}

impl StandardizeStats {
    /// Population mean and standard deviation of each column of the
    /// row-major `rows x width` buffer.
    pub fn fit(x: &[f32], width: usize) -> Result<Self> {
        if width == 0 || x.is_empty() || !x.len().is_multiple_of(width) {
            return Err(Error::InvalidInput("no rows to fit standardization on".into()));
        }
        let n = (x.len() / width) as f64;
        let mut mean = vec![0.0; width];
        for row in x.chunks(width) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for row in x.chunks(width) {
            for ((s, &v), m) in var.iter_mut().zip(row).zip(&mean) {
                let dv = v as f64 - m;
                *s += dv * dv;
            }
        }
        let mut floored = Vec::new();
        let std = var
            .into_iter()
            .enumerate()
            .map(|(j, s)| {
                let sd = (s / n).sqrt();
                if sd < STD_FLOOR {
                    floored.push(j);
                    STD_FLOOR
                } else {
                    sd
                }
            })
            .collect();
        Ok(StandardizeStats { mean, std, floored })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &mut [f32]) {
        let w = self.width();
        for row in x.chunks_mut(w) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = ((*v as f64 - m) / s) as f32;
            }
        }
    }
}

/// Fits statistics on the frames listed in `fit_on` and applies them to
/// every frame of `ds`.
pub fn standardize(ds: &LabeledDataset, fit_on: &[usize]) -> Result<(StandardizeStats, LabeledDataset)> {
    if fit_on.is_empty() {
        return Err(Error::InvalidInput("empty training split".into()));
    }
    let stats = StandardizeStats::fit(&ds.batch(fit_on).x, 2 * ds.d)?;
    let mut out = ds.clone();
    stats.apply(&mut out.iq);
    Ok((stats, out))
}
