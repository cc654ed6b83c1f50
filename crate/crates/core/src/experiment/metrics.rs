use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point-level detection metrics pooled over all subjects of a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean over subjects of each subject's own F1.
    pub subject_mean_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn counts(pred: &[u8], truth: &[u8]) -> [usize; 4] {
    let mut c = [0usize; 4];
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => c[0] += 1,
            (true, false) => c[1] += 1,
            (false, true) => c[2] += 1,
            (false, false) => c[3] += 1,
        }
    }
    c
}

/// Micro precision, recall and F1 from per-subject predicted and true maps.
pub fn confusion(pred: &[Vec<u8>], truth: &[Vec<u8>]) -> Result<Metrics> {
    if pred.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), actual: pred.len() });
    }
    let mut total = [0usize; 4];
    let mut subject_f1 = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        if p.len() != t.len() {
            return Err(Error::LengthMismatch { expected: t.len(), actual: p.len() });
        }
        let c = counts(p, t);
        subject_f1 += harmonic(ratio(c[0], c[0] + c[1]), ratio(c[0], c[0] + c[2]));
        for k in 0..4 {
            total[k] += c[k];
        }
    }
    let [tp, fp, fn_, tn] = total;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(Metrics {
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        f1: harmonic(precision, recall),
        subject_mean_f1: subject_f1 / pred.len() as f64,
    })
}
