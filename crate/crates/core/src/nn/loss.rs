use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clipped to `[EPS, 1 - EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-12;

/// Head weights in the combined multihead loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub attribute: f64,
    pub tactic: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            attribute: 0.8,
            tactic: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    /// Mean categorical cross-entropy of the tactic head.
    pub categorical: Option<f64>,
    /// Mean binary cross-entropy over both attribute labels.
    pub binary: Option<f64>,
    pub combined: f64,
}

impl LossValue {
    /// Weighted sum of whichever heads are present; a lone head has weight 1.
    pub fn combine(categorical: Option<f64>, binary: Option<f64>, w: &LossWeights) -> Self {
        let combined = match (categorical, binary) {
            (Some(c), Some(b)) => w.tactic * c + w.attribute * b,
            (Some(c), None) => c,
            (None, Some(b)) => b,
            (None, None) => 0.0,
        };
        Self {
            categorical,
            binary,
            combined,
        }
    }
}

/// Mean of `-ln p[label]` over rows.
pub fn categorical_cross_entropy(probs: &Array2<f64>, labels: &[u8]) -> Result<f64> {
    if probs.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::shape(probs.nrows(), labels.len()));
    }
    let mut total = 0.0;
    for (row, &y) in probs.outer_iter().zip(labels) {
        let p = *row
            .get(y as usize)
            .ok_or_else(|| Error::data(format!("label {y} out of range")))?;
        total -= p.clamp(PROB_EPS, 1.0 - PROB_EPS).ln();
    }
    Ok(total / labels.len() as f64)
}

/// Mean binary cross-entropy over every (row, label) pair.
pub fn binary_cross_entropy(probs: &Array2<f64>, bits: &Array2<f64>) -> Result<f64> {
    if probs.dim() != bits.dim() || probs.is_empty() {
        return Err(Error::shape(format!("{:?}", bits.dim()), format!("{:?}", probs.dim())));
    }
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(bits) {
        if y != 0.0 && y != 1.0 {
            return Err(Error::data(format!("binary label {y} is not 0 or 1")));
        }
        let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(total / probs.len() as f64)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.outer_iter_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
