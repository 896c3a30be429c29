use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::support::SupportSet;
use crate::tensor::DenseTensor;

/// `‖X_true − X_hat‖_F`.
pub fn frobenius_error(x_true: &DenseTensor, x_hat: &DenseTensor) -> Result<f64> {
    Ok(x_true.sub(x_hat)?.frobenius_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of `estimated` against `truth`.
///
/// An empty estimate has precision 1 and an empty truth has recall 1; F1 is the
/// harmonic mean of the pair, taken as 1 only when both sets are empty and 0
/// whenever the two rates are both zero.
pub fn support_scores(truth: &SupportSet, estimated: &SupportSet) -> SupportScores {
    let hits = truth.intersection_len(estimated) as f64;
    let precision = if estimated.is_empty() {
        1.0
    } else {
        hits / estimated.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits / truth.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    SupportScores {
        precision,
        recall,
        f1,
    }
}
