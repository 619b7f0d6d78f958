use ndarray::{ArrayViewMut, Axis, Dimension};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::FeatureTensor;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Raw scale of the position half of the features.
pub const POSITION_LENGTH: f64 = 40.0;
/// Raw scale of the velocity half of the features.
pub const VELOCITY_LENGTH: f64 = 1.0;

/// Zero-mean Gaussian noise sized as a percentage of each feature half's
/// characteristic length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Percent of the characteristic length used as standard deviation.
    pub factor: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(factor: f64, seed: u64) -> Result<Self> {
        if !(0.0..=100.0).contains(&factor) {
            return Err(Error::config(format!("noise factor {factor} outside [0, 100]")));
        }
        Ok(Self { factor, seed })
    }

    pub fn position_sigma(&self) -> f64 {
        self.factor / 100.0 * POSITION_LENGTH
    }

    pub fn velocity_sigma(&self) -> f64 {
        self.factor / 100.0 * VELOCITY_LENGTH
    }
}

/// Adds i.i.d. noise to raw (unnormalized) features. `stream` separates
/// independent draws from the same spec.
pub fn add_noise(features: &FeatureTensor, spec: &NoiseSpec, stream: u64) -> Result<FeatureTensor> {
    NoiseSpec::new(spec.factor, spec.seed)?;
    let mut out = features.clone();
    noise_in_place(out.data.view_mut(), features.n_agents, spec, stream);
    Ok(out)
}

/// Noise over any block whose last axis is the feature layout.
pub(crate) fn noise_in_place<D: Dimension>(
    mut block: ArrayViewMut<'_, f32, D>,
    n_agents: usize,
    spec: &NoiseSpec,
    stream: u64,
) {
    if spec.factor == 0.0 {
        return;
    }
    let (sp, sv) = (spec.position_sigma(), spec.velocity_sigma());
    let half = 2 * n_agents;
    let mut rng = rng::child(spec.seed, Purpose::Noise, stream);
    let last = Axis(block.ndim() - 1);
    for mut lane in block.lanes_mut(last) {
        for (k, v) in lane.iter_mut().enumerate() {
            let sigma = if k < half { sp } else { sv };
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = (*v as f64 + sigma * z) as f32;
        }
    }
}
