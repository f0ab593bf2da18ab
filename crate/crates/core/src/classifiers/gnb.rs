use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on fitted variances.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Gaussian naive Bayes: independent normal features per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    /// Class labels in ascending order; rows of the tables below.
    pub classes: Vec<usize>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
}

/// Fits per-class feature means and (floored, maximum-likelihood)
/// variances. `features` is row-major `labels.len() x width`.
pub fn gnb_fit<F: Copy + Into<f64>>(features: &[F], width: usize, labels: &[usize]) -> Result<GnbModel> {
    if width == 0 || features.len() != labels.len() * width {
        return Err(Error::Shape(format!(
            "{} values do not form {} rows of {width}",
            features.len(),
            labels.len()
        )));
    }
    let mut rows: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        rows.entry(y).or_default().push(i);
    }
    if let Some((y, r)) = rows.iter().find(|(_, r)| r.len() < 2) {
        return Err(Error::InvalidInput(format!(
            "class {y} has {} example(s); at least 2 are needed",
            r.len()
        )));
    }
    let n = labels.len() as f64;
    let mut m = GnbModel {
        classes: Vec::new(),
        means: Vec::new(),
        variances: Vec::new(),
        priors: Vec::new(),
    };
    for (y, r) in rows {
        let mut mean = vec![0.0; width];
        for &i in &r {
            for (a, v) in mean.iter_mut().zip(&features[i * width..(i + 1) * width]) {
                *a += (*v).into();
            }
        }
        mean.iter_mut().for_each(|a| *a /= r.len() as f64);
        let mut var = vec![0.0; width];
        for &i in &r {
            for ((a, v), mu) in var
                .iter_mut()
                .zip(&features[i * width..(i + 1) * width])
                .zip(&mean)
            {
                let dv = (*v).into() - mu;
                *a += dv * dv;
            }
        }
        var.iter_mut()
            .for_each(|a| *a = (*a / r.len() as f64).max(VARIANCE_FLOOR));
        m.classes.push(y);
        m.priors.push(r.len() as f64 / n);
        m.means.push(mean);
        m.variances.push(var);
    }
    Ok(m)
}

impl GnbModel {
    pub fn width(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Log prior plus log likelihood for every class.
    pub fn log_joint<F: Copy + Into<f64>>(&self, x: &[F]) -> Result<Vec<f64>> {
        if x.len() != self.width() {
            return Err(Error::Shape(format!(
                "input has {} features, model has {}",
                x.len(),
                self.width()
            )));
        }
        Ok((0..self.classes.len())
            .map(|c| {
                self.priors[c].ln()
                    + x.iter()
                        .zip(&self.means[c])
                        .zip(&self.variances[c])
                        .map(|((&v, mu), var)| {
                            let dv = v.into() - mu;
                            -0.5 * (2.0 * PI * var).ln() - dv * dv / (2.0 * var)
                        })
                        .sum::<f64>()
            })
            .collect())
    }

    pub fn predict<F: Copy + Into<f64>>(&self, x: &[F]) -> Result<usize> {
        let lj = self.log_joint(x)?;
        let mut best = 0;
        for c in 1..lj.len() {
            if lj[c] > lj[best] {
                best = c;
            }
        }
        Ok(self.classes[best])
    }

    pub fn accuracy<F: Copy + Into<f64>>(&self, features: &[F], labels: &[usize]) -> Result<f64> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("no examples".into()));
        }
        let w = self.width();
        let mut hits = 0;
        for (row, &y) in features.chunks(w).zip(labels) {
            if self.predict(row)? == y {
                hits += 1;
            }
        }
        Ok(hits as f64 / labels.len() as f64)
    }
}

pub fn gnb_predict<F: Copy + Into<f64>>(model: &GnbModel, x: &[F]) -> Result<usize> {
    model.predict(x)
}
