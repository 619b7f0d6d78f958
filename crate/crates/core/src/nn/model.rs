//! Architectures and the two-headed classifier.
//!
//! A trunk maps `[batch, time, feature]` input to a flat feature vector.
//! The attribute head is a dense layer with two sigmoids; the tactic head is
//! a dense layer with a 4-way softmax. With attribute concat enabled the
//! attribute probabilities are appended to the trunk features feeding the
//! tactic head.

use ndarray::{concatenate, s, Array2, Array3, ArrayD, ArrayView3, ArrayViewD, ArrayViewMutD, Axis};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::layers::{Act, Cache, Conv1d, Dense, Layer};
use super::loss::{binary_cross_entropy, categorical_cross_entropy, sigmoid, softmax_rows, LossValue, LossWeights};
use crate::data::OutputKind;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose, Rng};
use crate::sim::TacticLabel;

pub const N_TACTICS: usize = 4;
pub const N_ATTRIBUTES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Flattened input straight into the heads.
    LogReg,
    /// Fully connected: dense 100, 100, 60 with ReLU and dropout 0.2.
    Fc,
    /// Four conv blocks (64/3, 32/3, 192/5, 96/7), each followed by max
    /// pooling of 3, then global average pooling and dropout 0.1.
    Cnn,
    /// Fully convolutional: conv 96/7, conv 32/5, global average pooling.
    Fcn,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::LogReg => "logreg",
            Architecture::Fc => "fc",
            Architecture::Cnn => "cnn",
            Architecture::Fcn => "fcn",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logreg" | "lr" => Ok(Architecture::LogReg),
            "fc" => Ok(Architecture::Fc),
            "cnn" => Ok(Architecture::Cnn),
            "fcn" => Ok(Architecture::Fcn),
            other => Err(Error::config(format!("unknown model '{other}'"))),
        }
    }
}

/// Everything needed to rebuild a model's shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Architecture,
    pub output: OutputKind,
    pub attribute_concat: bool,
    pub time: usize,
    pub features: usize,
}

impl ModelSpec {
    pub fn new(arch: Architecture, output: OutputKind, time: usize, features: usize) -> Self {
        Self {
            arch,
            output,
            attribute_concat: output == OutputKind::Multihead,
            time,
            features,
        }
    }
}

/// Head probabilities for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutputs {
    /// `[batch, 4]` softmax rows.
    pub tactic: Option<Array2<f64>>,
    /// `[batch, 2]` sigmoid outputs `(comms, pronav)`.
    pub attributes: Option<Array2<f64>>,
}

/// Forward pass with everything backward needs.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub outputs: HeadOutputs,
    caches: Vec<Cache>,
    trunk_out: Array2<f64>,
    tactic_input: Option<Array2<f64>>,
}

/// Gradients in [`Model::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<ArrayD<f64>>);

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub trunk: Vec<Layer>,
    pub attribute_head: Option<Dense>,
    pub tactic_head: Option<Dense>,
}

fn conv_block(layers: &mut Vec<Layer>, channels: &mut usize, filters: usize, kernel: usize, rng: &mut Rng) {
    layers.push(Layer::Conv1d(Conv1d::he(*channels, filters, kernel, rng)));
    layers.push(Layer::Relu);
    *channels = filters;
}

impl Model {
    /// Fresh model with He-normal weights drawn from `seed`.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        if spec.time == 0 || spec.features == 0 {
            return Err(Error::config("model input must have positive time and feature sizes"));
        }
        let mut rng = rng::child(seed, Purpose::Init, 0);
        let mut trunk = Vec::new();
        let width = match spec.arch {
            Architecture::LogReg => {
                trunk.push(Layer::Flatten);
                spec.time * spec.features
            }
            Architecture::Fc => {
                trunk.push(Layer::Flatten);
                let mut width = spec.time * spec.features;
                for units in [100, 100, 60] {
                    trunk.push(Layer::Dense(Dense::he(width, units, &mut rng)));
                    trunk.push(Layer::Relu);
                    trunk.push(Layer::Dropout { rate: 0.2 });
                    width = units;
                }
                width
            }
            Architecture::Cnn => {
                let mut ch = spec.features;
                for (filters, kernel) in [(64, 3), (32, 3), (192, 5), (96, 7)] {
                    conv_block(&mut trunk, &mut ch, filters, kernel, &mut rng);
                    trunk.push(Layer::MaxPool1d { size: 3 });
                }
                trunk.push(Layer::GlobalAvgPool);
                trunk.push(Layer::Dropout { rate: 0.1 });
                ch
            }
            Architecture::Fcn => {
                let mut ch = spec.features;
                for (filters, kernel) in [(96, 7), (32, 5)] {
                    conv_block(&mut trunk, &mut ch, filters, kernel, &mut rng);
                }
                trunk.push(Layer::GlobalAvgPool);
                ch
            }
        };
        Self::with_trunk(spec, trunk, width, &mut rng)
    }

    /// Attaches He-initialized heads to an arbitrary trunk producing `width`
    /// flat features.
    pub fn with_trunk(spec: ModelSpec, trunk: Vec<Layer>, width: usize, rng: &mut Rng) -> Result<Self> {
        if spec.attribute_concat && spec.output != OutputKind::Multihead {
            return Err(Error::config("attribute concat requires a multihead model"));
        }
        let attribute_head = spec
            .output
            .has_attributes()
            .then(|| Dense::he(width, N_ATTRIBUTES, rng));
        let tactic_in = width + if spec.attribute_concat { N_ATTRIBUTES } else { 0 };
        let tactic_head = spec.output.has_tactic().then(|| Dense::he(tactic_in, N_TACTICS, rng));
        Ok(Self {
            spec,
            trunk,
            attribute_head,
            tactic_head,
        })
    }

    pub fn params(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut out: Vec<ArrayViewD<'_, f64>> = self.trunk.iter().flat_map(Layer::params).collect();
        for head in [&self.attribute_head, &self.tactic_head].into_iter().flatten() {
            out.push(head.w.view().into_dyn());
            out.push(head.b.view().into_dyn());
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut out: Vec<ArrayViewMutD<'_, f64>> = self.trunk.iter_mut().flat_map(Layer::params_mut).collect();
        for head in [&mut self.attribute_head, &mut self.tactic_head].into_iter().flatten() {
            out.push(head.w.view_mut().into_dyn());
            out.push(head.b.view_mut().into_dyn());
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_input(&self, x: &ArrayView3<f64>) -> Result<()> {
        let (_, t, f) = x.dim();
        if t != self.spec.time || f != self.spec.features {
            return Err(Error::shape(
                format!("[_, {}, {}]", self.spec.time, self.spec.features),
                format!("{:?}", x.shape()),
            ));
        }
        Ok(())
    }

    /// Forward pass. Dropout draws from `dropout_rng` only when `train`.
    pub fn forward(&self, x: ArrayView3<f64>, train: bool, dropout_rng: &mut Rng) -> Result<ForwardPass> {
        self.check_input(&x)?;
        let mut act = Act::Seq(x.to_owned());
        let mut caches = Vec::with_capacity(self.trunk.len());
        for layer in &self.trunk {
            let (next, cache) = layer.forward(act, train, dropout_rng)?;
            caches.push(cache);
            act = next;
        }
        let trunk_out = act.into_flat()?;

        let attributes = self.attribute_head.as_ref().map(|h| {
            let mut z = h.forward(trunk_out.view());
            z.mapv_inplace(sigmoid);
            z
        });
        let (tactic, tactic_input) = match &self.tactic_head {
            Some(h) => {
                let input = match (&attributes, self.spec.attribute_concat) {
                    (Some(p), true) => concatenate![Axis(1), trunk_out, *p],
                    _ => trunk_out.clone(),
                };
                (Some(softmax_rows(&h.forward(input.view()))), Some(input))
            }
            None => (None, None),
        };
        Ok(ForwardPass {
            outputs: HeadOutputs { tactic, attributes },
            caches,
            trunk_out,
            tactic_input,
        })
    }

    /// Inference-mode probabilities.
    pub fn predict_proba(&self, x: ArrayView3<f64>) -> Result<HeadOutputs> {
        // dropout is inactive, the generator is never drawn from
        let mut unused = rng::master(0);
        Ok(self.forward(x, false, &mut unused)?.outputs)
    }

    /// Loss of a forward pass against tactic labels.
    pub fn loss(&self, outputs: &HeadOutputs, labels: &[TacticLabel], weights: &LossWeights) -> Result<LossValue> {
        let categorical = match &outputs.tactic {
            Some(p) => Some(categorical_cross_entropy(p, &tactic_ids(labels))?),
            None => None,
        };
        let binary = match &outputs.attributes {
            Some(p) => Some(binary_cross_entropy(p, &attribute_targets(labels))?),
            None => None,
        };
        Ok(LossValue::combine(categorical, binary, weights))
    }

    /// Gradients of the combined loss with respect to every parameter.
    pub fn backward(&self, pass: &ForwardPass, labels: &[TacticLabel], weights: &LossWeights) -> Result<Gradients> {
        let batch = pass.trunk_out.nrows();
        if labels.len() != batch {
            return Err(Error::shape(batch, labels.len()));
        }
        let both = self.attribute_head.is_some() && self.tactic_head.is_some();
        let (w_attr, w_tac) = if both {
            (weights.attribute, weights.tactic)
        } else {
            (1.0, 1.0)
        };
        let width = pass.trunk_out.ncols();
        let mut d_trunk = Array2::<f64>::zeros((batch, width));
        let mut head_grads: Vec<ArrayD<f64>> = Vec::new();
        let mut tactic_grads: Vec<ArrayD<f64>> = Vec::new();
        let mut d_attr_probs: Option<Array2<f64>> = None;

        if let (Some(head), Some(p)) = (&self.tactic_head, &pass.outputs.tactic) {
            // softmax + cross-entropy: dL/dz = (p - onehot) / batch
            let mut dz = p.clone();
            for (mut row, t) in dz.outer_iter_mut().zip(labels) {
                row[t.id() as usize] -= 1.0;
            }
            dz *= w_tac / batch as f64;
            let input = pass.tactic_input.as_ref().expect("tactic input cached");
            let (dx, dw, db) = head.backward(input.view(), dz.view());
            d_trunk += &dx.slice(s![.., ..width]);
            if self.spec.attribute_concat && self.attribute_head.is_some() {
                d_attr_probs = Some(dx.slice(s![.., width..]).to_owned());
            }
            tactic_grads.push(dw.into_dyn());
            tactic_grads.push(db.into_dyn());
        }

        if let (Some(head), Some(p)) = (&self.attribute_head, &pass.outputs.attributes) {
            // sigmoid + binary cross-entropy: dL/dz = (p - y) / (batch * 2)
            let y = attribute_targets(labels);
            let mut dz = (p - &y) * (w_attr / (batch * N_ATTRIBUTES) as f64);
            if let Some(dp) = d_attr_probs {
                dz += &(dp * p * &p.mapv(|v| 1.0 - v));
            }
            let (dx, dw, db) = head.backward(pass.trunk_out.view(), dz.view());
            d_trunk += &dx;
            head_grads.push(dw.into_dyn());
            head_grads.push(db.into_dyn());
        }
        head_grads.extend(tactic_grads);

        let mut grad = Act::Flat(d_trunk);
        let mut trunk_grads: Vec<Vec<ArrayD<f64>>> = Vec::with_capacity(self.trunk.len());
        for (layer, cache) in self.trunk.iter().zip(&pass.caches).rev() {
            let (dx, g) = layer.backward(grad, cache)?;
            trunk_grads.push(g);
            grad = dx;
        }
        let mut all: Vec<ArrayD<f64>> = trunk_grads.into_iter().rev().flatten().collect();
        all.extend(head_grads);
        Ok(Gradients(all))
    }
}

pub fn tactic_ids(labels: &[TacticLabel]) -> Vec<u8> {
    labels.iter().map(|t| t.id()).collect()
}

pub fn attribute_targets(labels: &[TacticLabel]) -> Array2<f64> {
    Array2::from_shape_fn((labels.len(), N_ATTRIBUTES), |(i, k)| labels[i].attributes()[k] as f64)
}

/// Predicted labels for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub tactic: Option<Vec<u8>>,
    pub attributes: Option<Vec<[u8; 2]>>,
}

/// Tactic = argmax with ties to the lower index; attribute bit = p >= 0.5.
/// The two heads are decoded independently.
pub fn decode(outputs: &HeadOutputs) -> Predictions {
    let tactic = outputs.tactic.as_ref().map(|p| {
        p.outer_iter()
            .map(|row| {
                let mut best = 0;
                for k in 1..row.len() {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                best as u8
            })
            .collect()
    });
    let attributes = outputs.attributes.as_ref().map(|p| {
        p.outer_iter()
            .map(|row| [(row[0] >= 0.5) as u8, (row[1] >= 0.5) as u8])
            .collect()
    });
    Predictions { tactic, attributes }
}

/// Converts an f32 feature block to the f64 batch the model consumes.
pub fn to_batch(x: ArrayView3<f32>) -> Array3<f64> {
    x.mapv(|v| v as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn zero_dense_model(output: OutputKind) -> Model {
        let spec = ModelSpec::new(Architecture::LogReg, output, 3, 4);
        let mut m = Model::new(spec, 1).unwrap();
        for mut p in m.params_mut() {
            p.fill(0.0);
        }
        m
    }

    #[test]
    fn zero_weights_give_uniform_softmax() {
        let m = zero_dense_model(OutputKind::Multiclass);
        let x = Array3::from_shape_fn((5, 3, 4), |(b, t, f)| (b + t * f) as f64);
        let out = m.predict_proba(x.view()).unwrap();
        let p = out.tactic.unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(out.attributes.is_none());
    }

    #[test]
    fn decode_tie_breaks() {
        let outputs = HeadOutputs {
            tactic: Some(Array2::from_elem((1, 4), 0.25)),
            attributes: Some(array![[0.5, 0.4999]]),
        };
        let p = decode(&outputs);
        assert_eq!(p.tactic.unwrap(), vec![0]);
        assert_eq!(p.attributes.unwrap(), vec![[1, 0]]);
    }

    #[test]
    fn heads_are_decoded_independently() {
        let outputs = HeadOutputs {
            tactic: Some(array![[0.1, 0.7, 0.1, 0.1]]),
            attributes: Some(array![[0.9, 0.1]]),
        };
        let p = decode(&outputs);
        // tactic 1 is [0, 1] but the attribute head says [1, 0]
        assert_eq!(p.tactic.unwrap(), vec![1]);
        assert_eq!(p.attributes.unwrap(), vec![[1, 0]]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        for arch in [
            Architecture::LogReg,
            Architecture::Fc,
            Architecture::Cnn,
            Architecture::Fcn,
        ] {
            let spec = ModelSpec::new(arch, OutputKind::Multihead, 10, 8);
            let m = Model::new(spec, 3).unwrap();
            let x = Array3::from_shape_fn((4, 10, 8), |(b, t, f)| ((b * 31 + t * 7 + f) % 11) as f64 - 5.0);
            let out = m.predict_proba(x.view()).unwrap();
            for row in out.tactic.unwrap().outer_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-9);
            }
            assert!(out.attributes.unwrap().iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn input_shape_checked() {
        let m = Model::new(ModelSpec::new(Architecture::Fcn, OutputKind::Multiclass, 10, 8), 0).unwrap();
        assert!(m.predict_proba(Array3::zeros((2, 9, 8)).view()).is_err());
    }

    #[test]
    fn parameter_counts() {
        // logreg multiclass on 20 x 40 inputs: 800 * 4 + 4
        let m = Model::new(ModelSpec::new(Architecture::LogReg, OutputKind::Multiclass, 20, 40), 0).unwrap();
        assert_eq!(m.param_count(), 3204);
        // fcn multihead: conv 7*40*96+96, conv 5*96*32+32, attr 32*2+2, tactic 34*4+4
        let m = Model::new(ModelSpec::new(Architecture::Fcn, OutputKind::Multihead, 20, 40), 0).unwrap();
        assert_eq!(m.param_count(), 26976 + 15392 + 66 + 140);
    }
}
