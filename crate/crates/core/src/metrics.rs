//! Confusion matrices and precision/recall/F1 aggregation.
//!
//! Macro-F1 averages over the *full* label inventory, counting absent
//! classes as 0. Libraries differ here; this choice makes weak minority
//! classes visible in the headline score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// K×K counts; rows are gold labels, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let k = labels.len();
        Self {
            labels,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    /// Add another matrix with the same inventory into this one.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::Config(
                "cannot merge confusion matrices with different inventories".to_string(),
            ));
        }
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
        Ok(())
    }

    /// CSV with a `gold\predicted` corner cell, for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\predicted");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.counts) {
            out.push_str(label);
            for c in row {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Count (gold, predicted) pairs into a matrix over `inventory`.
pub fn confusion_matrix<S: AsRef<str>>(
    gold: &[S],
    pred: &[S],
    inventory: &[String],
) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    let index_of = |label: &str| -> Result<usize> {
        inventory
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
            })
    };
    let mut cm = ConfusionMatrix::zeros(inventory.to_vec());
    if gold.is_empty() {
        log::warn!("confusion matrix over empty input; metrics default to 0");
    }
    for (g, p) in gold.iter().zip(pred) {
        let gi = index_of(g.as_ref())?;
        let pi = index_of(p.as_ref())?;
        cm.counts[gi][pi] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPrf {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold count for the class.
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall, and F1; any 0/0 is defined as 0.
pub fn per_class_prf(cm: &ConfusionMatrix) -> Vec<ClassPrf> {
    (0..cm.labels.len())
        .map(|i| {
            let tp = cm.counts[i][i];
            let precision = ratio(tp, cm.col_sum(i));
            let recall = ratio(tp, cm.row_sum(i));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassPrf {
                label: cm.labels[i].clone(),
                precision,
                recall,
                f1,
                support: cm.row_sum(i),
            }
        })
        .collect()
}

/// Unweighted mean of per-class F1 over the full inventory.
pub fn f1_macro(cm: &ConfusionMatrix) -> f64 {
    let prf = per_class_prf(cm);
    if prf.is_empty() {
        return 0.0;
    }
    prf.iter().map(|c| c.f1).sum::<f64>() / prf.len() as f64
}

/// Globally pooled F1: diagonal over total (accuracy for single-label data).
pub fn f1_micro(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total();
    if total == 0 {
        return 0.0;
    }
    cm.trace() as f64 / total as f64
}

/// Full evaluation bundle for one (gold, pred) comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassPrf>,
    pub f1_macro: f64,
    pub f1_micro: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate<S: AsRef<str>>(gold: &[S], pred: &[S], inventory: &[String]) -> Result<EvalReport> {
    let cm = confusion_matrix(gold, pred, inventory)?;
    Ok(EvalReport {
        per_class: per_class_prf(&cm),
        f1_macro: f1_macro(&cm),
        f1_micro: f1_micro(&cm),
        confusion: cm,
    })
}

/// Plain-text rendering with percentages to two decimals.
pub fn render_report(report: &EvalReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>10} {:>10} {:>10} {:>8}", "Class", "P (%)", "R (%)", "F1 (%)", "Support");
    for c in &report.per_class {
        let _ = writeln!(
            out,
            "{:<16} {:>10.2} {:>10.2} {:>10.2} {:>8}",
            c.label,
            c.precision * 100.0,
            c.recall * 100.0,
            c.f1 * 100.0,
            c.support
        );
    }
    let _ = writeln!(out, "F1-micro (%): {:.2}", report.f1_micro * 100.0);
    let _ = writeln!(out, "F1-macro (%): {:.2}", report.f1_macro * 100.0);
    out
}
