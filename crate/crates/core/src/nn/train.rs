//! Mini-batch gradient descent with early stopping on validation loss.

use log::{debug, info};
use ndarray::{ArrayD, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::loss::{LossValue, LossWeights};
use super::model::{to_batch, Gradients, HeadOutputs, Model};
use crate::data::SplitData;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a new validation minimum before stopping.
    pub patience: usize,
    /// Heavy-ball momentum; 0 is plain SGD.
    pub momentum: f64,
    pub loss_weights: LossWeights,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            batch_size: 64,
            max_epochs: 100,
            patience: 10,
            momentum: 0.0,
            loss_weights: LossWeights::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::config("batch size, max epochs and patience must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum must lie in [0, 1)"));
        }
        let w = self.loss_weights;
        if w.attribute < 0.0 || w.tactic < 0.0 || ((w.attribute + w.tactic) - 1.0).abs() > 1e-9 {
            return Err(Error::config("loss weights must be non-negative and sum to 1"));
        }
        Ok(())
    }
}

/// SGD with optional momentum.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<ArrayD<f64>>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64) -> Self {
        Self {
            learning_rate,
            momentum,
            velocity: Vec::new(),
        }
    }

    pub fn step(&mut self, model: &mut Model, grads: &Gradients) {
        let mut params = model.params_mut();
        assert_eq!(params.len(), grads.0.len(), "gradient list does not match parameters");
        if self.momentum == 0.0 {
            for (p, g) in params.iter_mut().zip(&grads.0) {
                p.scaled_add(-self.learning_rate, g);
            }
            return;
        }
        if self.velocity.is_empty() {
            self.velocity = grads.0.iter().map(|g| ArrayD::zeros(g.raw_dim())).collect();
        }
        for ((p, g), v) in params.iter_mut().zip(&grads.0).zip(&mut self.velocity) {
            v.mapv_inplace(|x| x * self.momentum);
            v.scaled_add(-self.learning_rate, g);
            *p += &*v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: LossValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// Epoch (0-based) whose weights were restored.
    pub best_epoch: usize,
    pub best_val_loss: LossValue,
    pub epochs_trained: usize,
    pub stopped_early: bool,
    pub seconds: f64,
}

/// Batch size used for loss and prediction passes.
const EVAL_BATCH: usize = 256;

/// Inference-mode probabilities for a whole split.
pub fn predict_split(model: &Model, data: &SplitData) -> Result<HeadOutputs> {
    let x = data.features.view();
    let mut tactic = Vec::new();
    let mut attributes = Vec::new();
    let n = data.len();
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_BATCH).min(n);
        let xb = to_batch(x.slice_axis(Axis(0), (start..end).into()));
        let out = model.predict_proba(xb.view())?;
        if let Some(t) = out.tactic {
            tactic.push(t);
        }
        if let Some(a) = out.attributes {
            attributes.push(a);
        }
        start = end;
    }
    let stack = |parts: Vec<ndarray::Array2<f64>>| {
        (!parts.is_empty()).then(|| {
            let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
            ndarray::concatenate(Axis(0), &views).expect("matching head widths")
        })
    };
    Ok(HeadOutputs {
        tactic: stack(tactic),
        attributes: stack(attributes),
    })
}

/// Inference-mode loss over a whole split.
pub fn evaluate_loss(model: &Model, data: &SplitData, weights: &LossWeights) -> Result<LossValue> {
    let out = predict_split(model, data)?;
    model.loss(&out, &data.tactics, weights)
}

/// One full forward/backward pass over the given instances.
pub fn batch_gradients(
    model: &Model,
    data: &SplitData,
    indices: &[usize],
    weights: &LossWeights,
    dropout_rng: &mut rng::Rng,
) -> Result<(LossValue, Gradients)> {
    let xb = to_batch(data.features.data.select(Axis(0), indices).view());
    let labels: Vec<_> = indices.iter().map(|&i| data.tactics[i]).collect();
    let pass = model.forward(xb.view(), true, dropout_rng)?;
    let loss = model.loss(&pass.outputs, &labels, weights)?;
    let grads = model.backward(&pass, &labels, weights)?;
    Ok((loss, grads))
}

/// Trains in place and restores the weights from the epoch with the lowest
/// validation loss.
pub fn train(model: &mut Model, train: &SplitData, val: &SplitData, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::data("training and validation splits must be non-empty"));
    }
    let started = Instant::now();
    let mut opt = Sgd::new(cfg.learning_rate, cfg.momentum);
    let mut history = Vec::new();
    let mut best: Option<(usize, LossValue, Model)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng::child(cfg.seed, Purpose::Batches, epoch as u64));
        let mut dropout_rng = rng::child(cfg.seed, Purpose::Dropout, epoch as u64);
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (loss, grads) = batch_gradients(model, train, chunk, &cfg.loss_weights, &mut dropout_rng)?;
            if !loss.combined.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("training loss {} on a batch of {}", loss.combined, chunk.len()),
                });
            }
            weighted += loss.combined * chunk.len() as f64;
            opt.step(model, &grads);
        }
        let train_loss = weighted / train.len() as f64;
        let val_loss = evaluate_loss(model, val, &cfg.loss_weights)?;
        if !val_loss.combined.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("validation loss {}", val_loss.combined),
            });
        }
        debug!("epoch {epoch}: train {train_loss:.4} val {:.4}", val_loss.combined);
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });

        let improved = best.as_ref().is_none_or(|(_, b, _)| val_loss.combined < b.combined);
        if improved {
            best = Some((epoch, val_loss, model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let (best_epoch, best_val_loss, best_model) = best.expect("at least one epoch ran");
    *model = best_model;
    let report = TrainReport {
        epochs_trained: history.len(),
        history,
        best_epoch,
        best_val_loss,
        stopped_early,
        seconds: started.elapsed().as_secs_f64(),
    };
    info!(
        "{} {}: {} epochs, best val loss {:.4} at epoch {}",
        model.spec.arch, model.spec.output, report.epochs_trained, best_val_loss.combined, best_epoch
    );
    Ok(report)
}
