//! Model checkpoints: `u32` LE header length, JSON header (architecture,
//! parameter shapes, training config), then every parameter array as raw
//! little-endian f64 in parameter order.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::model::{Model, ModelSpec};
use super::train::TrainConfig;
use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::io::Cursor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub spec: ModelSpec,
    pub shapes: Vec<Vec<usize>>,
    pub train_config: Option<TrainConfig>,
    /// Normalization the model was trained under.
    pub norm: Option<NormStats>,
}

const FORMAT: &str = "swarmtsc-model-v1";

pub fn write_checkpoint<W: Write>(
    mut w: W,
    model: &Model,
    train_config: Option<&TrainConfig>,
    norm: Option<&NormStats>,
) -> Result<()> {
    let params = model.params();
    let header = CheckpointHeader {
        format: FORMAT.into(),
        spec: model.spec.clone(),
        shapes: params.iter().map(|p| p.shape().to_vec()).collect(),
        train_config: train_config.cloned(),
        norm: norm.cloned(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(model.param_count() * 8);
    for p in &params {
        for v in p.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(Model, CheckpointHeader)> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    if header.format != FORMAT {
        return Err(Error::Format(format!("unknown checkpoint format '{}'", header.format)));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;

    // rebuild the architecture, then overwrite every parameter
    let mut model = Model::new(header.spec.clone(), 0)?;
    let mut cur = Cursor::new(&payload);
    {
        let mut params = model.params_mut();
        if params.len() != header.shapes.len() {
            return Err(Error::Format("parameter count differs from architecture".into()));
        }
        for (p, shape) in params.iter_mut().zip(&header.shapes) {
            if p.shape() != shape.as_slice() {
                return Err(Error::shape(format!("{:?}", p.shape()), format!("{shape:?}")));
            }
            let values = cur.f64s(p.len())?;
            for (dst, src) in p.iter_mut().zip(values) {
                *dst = src;
            }
        }
    }
    cur.finish()?;
    Ok((model, header))
}
