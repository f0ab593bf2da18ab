use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigstream::ModType;

/// `counts[true][predicted]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`; 0 when empty.
    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.trace() as f64 / t as f64
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Per-SNR confusion matrices over `classes` labels.
pub fn confusion(
    predictions: &[usize],
    labels: &[usize],
    snrs: &[i16],
    classes: usize,
) -> Result<BTreeMap<i16, ConfusionMatrix>> {
    if predictions.len() != labels.len() || labels.len() != snrs.len() {
        return Err(Error::Shape(format!(
            "{} predictions, {} labels, {} SNR tags",
            predictions.len(),
            labels.len(),
            snrs.len()
        )));
    }
    let mut out: BTreeMap<i16, ConfusionMatrix> = BTreeMap::new();
    for ((&p, &y), &s) in predictions.iter().zip(labels).zip(snrs) {
        if p >= classes || y >= classes {
            return Err(Error::InvalidInput(format!(
                "class {} outside [0, {classes})",
                p.max(y)
            )));
        }
        out.entry(s).or_insert_with(|| ConfusionMatrix::new(classes)).counts[y][p] += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrResult {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Test results of one final classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub d: usize,
    pub k: usize,
    pub seed: u64,
    pub per_snr: BTreeMap<i16, SnrResult>,
    pub epochs: usize,
    pub train_seconds: f64,
    pub selection_seconds: f64,
}

impl EvalReport {
    pub fn seconds_per_epoch(&self) -> f64 {
        if self.epochs == 0 {
            0.0
        } else {
            self.train_seconds / self.epochs as f64
        }
    }

    pub fn accuracy_at(&self, snr_db: i16) -> Option<f64> {
        self.per_snr.get(&snr_db).map(|r| r.accuracy)
    }

    /// Pooled accuracy over every SNR.
    pub fn overall_accuracy(&self) -> f64 {
        let (hit, all) = self.per_snr.values().fold((0, 0), |(h, a), r| {
            (h + r.confusion.trace(), a + r.confusion.total())
        });
        if all == 0 {
            0.0
        } else {
            hit as f64 / all as f64
        }
    }

    /// The report with wall-clock fields zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> EvalReport {
        EvalReport {
            train_seconds: 0.0,
            selection_seconds: 0.0,
            ..self.clone()
        }
    }
}

pub const REPORT_HEADER: &str = "snr_db,accuracy,epochs,seconds_per_epoch,total_seconds";

pub fn report_csv(report: &EvalReport) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for (snr, r) in &report.per_snr {
        writeln!(
            s,
            "{snr},{:.6},{},{:.6},{:.6}",
            r.accuracy,
            report.epochs,
            report.seconds_per_epoch(),
            report.train_seconds
        )
        .unwrap();
    }
    s
}

/// Counts with true classes down the rows; columns named by class when the
/// matrix has the ten modulation classes.
pub fn confusion_csv(m: &ConfusionMatrix) -> String {
    let name = |i: usize| {
        if m.classes() == ModType::COUNT {
            ModType::ALL[i].name().to_string()
        } else {
            i.to_string()
        }
    };
    let mut s = String::from("true\\pred");
    for j in 0..m.classes() {
        write!(s, ",{}", name(j)).unwrap();
    }
    s.push('\n');
    for (i, row) in m.counts.iter().enumerate() {
        s.push_str(&name(i));
        for c in row {
            write!(s, ",{c}").unwrap();
        }
        s.push('\n');
    }
    s
}
