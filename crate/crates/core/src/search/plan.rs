use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-SNR ordered sample positions to acquire, plus how they were found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub d: usize,
    pub k: usize,
    /// `k / d`.
    pub rate: f64,
    pub per_snr: BTreeMap<i16, Vec<usize>>,
    #[serde(default)]
    pub epsilon_used: BTreeMap<i16, f64>,
    #[serde(default)]
    pub val_acc: BTreeMap<i16, f64>,
    /// SNRs where no leaf beat the previous SNR's accuracy.
    #[serde(default)]
    pub missed: Vec<i16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
}

impl SelectionPlan {
    pub fn new(d: usize, k: usize) -> Self {
        SelectionPlan {
            d,
            k,
            rate: if d == 0 { 0.0 } else { k as f64 / d as f64 },
            per_snr: BTreeMap::new(),
            epsilon_used: BTreeMap::new(),
            val_acc: BTreeMap::new(),
            missed: Vec::new(),
            method: None,
        }
    }

    /// The same positions at every SNR of `grid`.
    pub fn uniform_over(d: usize, indices: Vec<usize>, grid: &[i16]) -> Self {
        let mut p = SelectionPlan::new(d, indices.len());
        for &s in grid {
            p.per_snr.insert(s, indices.clone());
        }
        p
    }

    pub fn with_method(mut self, method: impl Into<String>) -> Self {
        self.method = Some(method.into());
        self
    }

    /// Positions for `snr_db`, sorted ascending to preserve time order.
    pub fn sorted_indices(&self, snr_db: i16) -> Option<Vec<usize>> {
        self.per_snr.get(&snr_db).map(|v| {
            let mut v = v.clone();
            v.sort_unstable();
            v
        })
    }

    /// Lists every schema violation; `grid`, when given, must be covered.
    pub fn validate(&self, grid: Option<&[i16]>) -> Result<()> {
        let mut errs = Vec::new();
        if self.k == 0 || self.k > self.d {
            errs.push(format!("k={} must lie in [1, d={}]", self.k, self.d));
        } else if (self.rate - self.k as f64 / self.d as f64).abs() > 1e-12 {
            errs.push(format!("rate {} does not equal k/d", self.rate));
        }
        for (snr, v) in &self.per_snr {
            if v.len() != self.k {
                errs.push(format!("SNR {snr} dB lists {} indices, expected {}", v.len(), self.k));
            }
            for &j in v {
                if j >= self.d {
                    errs.push(format!("SNR {snr} dB: index {j} outside [0, {})", self.d));
                }
            }
            let mut s = v.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != v.len() {
                errs.push(format!("SNR {snr} dB lists a repeated index"));
            }
        }
        if let Some(grid) = grid {
            for s in grid {
                if !self.per_snr.contains_key(s) {
                    errs.push(format!("no entry for SNR {s} dB"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}
