use serde::{Deserialize, Serialize};

use crate::corpus::AnnotationSet;
use crate::error::{Error, Result};

/// One-hot block for a single category; column order is schema order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMatrix {
    pub category: String,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatrix {
    pub records: Vec<String>,
    pub categories: Vec<CategoryMatrix>,
}

impl LabelMatrix {
    pub fn category(&self, name: &str) -> Option<&CategoryMatrix> {
        self.categories.iter().find(|c| c.category == name)
    }

    /// Concatenated row across categories, in global label order.
    pub fn flat_row(&self, i: usize) -> Vec<bool> {
        self.categories
            .iter()
            .flat_map(|c| c.rows[i].iter().map(|&v| v == 1))
            .collect()
    }
}

pub fn one_hot_encode<S: AsRef<str>>(annotations: &AnnotationSet, records: &[S]) -> LabelMatrix {
    let categories = annotations
        .schema
        .categories()
        .iter()
        .map(|cat| CategoryMatrix {
            category: cat.name.clone(),
            labels: cat.labels.clone(),
            rows: records
                .iter()
                .map(|id| {
                    cat.labels
                        .iter()
                        .map(|l| u8::from(annotations.has_label(id.as_ref(), l)))
                        .collect()
                })
                .collect(),
        })
        .collect();
    LabelMatrix {
        records: records.iter().map(|s| s.as_ref().to_string()).collect(),
        categories,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub hamming_loss: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub records: usize,
    pub labels: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Counts {
    fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

impl EvalMetrics {
    /// Rows are records, columns labels in a shared order.
    pub fn from_cells(truth: &[Vec<bool>], pred: &[Vec<bool>]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Empty("evaluation split has no records".into()));
        }
        if truth.len() != pred.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                found: pred.len(),
            });
        }
        let labels = truth[0].len();
        let mut per_label = vec![Counts::default(); labels];
        let mut wrong = 0usize;
        for (t, p) in truth.iter().zip(pred) {
            if t.len() != labels || p.len() != labels {
                return Err(Error::DimensionMismatch {
                    expected: labels,
                    found: if t.len() != labels { t.len() } else { p.len() },
                });
            }
            for (j, (&tv, &pv)) in t.iter().zip(p).enumerate() {
                let c = &mut per_label[j];
                match (tv, pv) {
                    (true, true) => c.tp += 1,
                    (false, true) => {
                        c.fp += 1;
                        wrong += 1;
                    }
                    (true, false) => {
                        c.fn_ += 1;
                        wrong += 1;
                    }
                    (false, false) => {}
                }
            }
        }
        let cells = truth.len() * labels;
        let pooled = per_label.iter().fold(Counts::default(), |acc, c| Counts {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
        });
        let macro_f1 = if labels == 0 {
            1.0
        } else {
            per_label.iter().map(Counts::f1).sum::<f64>() / labels as f64
        };
        Ok(EvalMetrics {
            hamming_loss: if cells == 0 { 0.0 } else { wrong as f64 / cells as f64 },
            micro_f1: pooled.f1(),
            macro_f1,
            records: truth.len(),
            labels,
        })
    }
}
