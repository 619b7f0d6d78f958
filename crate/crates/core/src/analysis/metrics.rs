use serde::{Deserialize, Serialize};

use crate::data::SplitData;
use crate::error::{Error, Result};
use crate::nn::{decode, predict_split, Model, N_TACTICS};

/// Accuracy of one head with its random-guess adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadMetrics {
    pub accuracy: f64,
    /// `1 / n_classes`.
    pub random_baseline: f64,
    /// `accuracy - random_baseline`.
    pub adjusted: f64,
    /// `1 - adjusted / (1 - random_baseline)`: 0 is perfect, 1 is chance.
    pub normalized_error: f64,
}

/// Counts with rows = true class and columns = predicted class.
pub type Confusion = Vec<Vec<u64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tactic: Option<HeadMetrics>,
    pub comms: Option<HeadMetrics>,
    pub pronav: Option<HeadMetrics>,
    pub tactic_confusion: Option<Confusion>,
    pub comms_confusion: Option<Confusion>,
    pub pronav_confusion: Option<Confusion>,
    pub val_loss: Option<f64>,
    pub epochs_trained: Option<usize>,
}

fn check_lengths(predictions: &[u8], labels: &[u8]) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::data("no predictions to score"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::shape(labels.len(), predictions.len()));
    }
    Ok(())
}

pub fn accuracy_metrics(predictions: &[u8], labels: &[u8], n_classes: usize) -> Result<HeadMetrics> {
    check_lengths(predictions, labels)?;
    if n_classes < 2 {
        return Err(Error::config("at least two classes are needed"));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    let accuracy = hits as f64 / labels.len() as f64;
    let random_baseline = 1.0 / n_classes as f64;
    let adjusted = accuracy - random_baseline;
    Ok(HeadMetrics {
        accuracy,
        random_baseline,
        adjusted,
        normalized_error: 1.0 - adjusted / (1.0 - random_baseline),
    })
}

pub fn confusion(predictions: &[u8], labels: &[u8], n: usize) -> Result<Confusion> {
    check_lengths(predictions, labels)?;
    let mut m = vec![vec![0u64; n]; n];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p as usize >= n || l as usize >= n {
            return Err(Error::data(format!("class {} out of range for {n} classes", p.max(l))));
        }
        m[l as usize][p as usize] += 1;
    }
    Ok(m)
}

/// Scores a model on one split. Attribute heads are scored bit by bit.
pub fn evaluate(model: &Model, data: &SplitData) -> Result<MetricsReport> {
    let pred = decode(&predict_split(model, data)?);
    let truth: Vec<u8> = data.tactics.iter().map(|t| t.id()).collect();
    let mut report = MetricsReport {
        tactic: None,
        comms: None,
        pronav: None,
        tactic_confusion: None,
        comms_confusion: None,
        pronav_confusion: None,
        val_loss: None,
        epochs_trained: None,
    };
    if let Some(p) = &pred.tactic {
        report.tactic = Some(accuracy_metrics(p, &truth, N_TACTICS)?);
        report.tactic_confusion = Some(confusion(p, &truth, N_TACTICS)?);
    }
    if let Some(bits) = &pred.attributes {
        for k in 0..2 {
            let p: Vec<u8> = bits.iter().map(|b| b[k]).collect();
            let y: Vec<u8> = data.tactics.iter().map(|t| t.attributes()[k]).collect();
            let (head, conf) = (accuracy_metrics(&p, &y, 2)?, confusion(&p, &y, 2)?);
            if k == 0 {
                report.comms = Some(head);
                report.comms_confusion = Some(conf);
            } else {
                report.pronav = Some(head);
                report.pronav_confusion = Some(conf);
            }
        }
    }
    Ok(report)
}
