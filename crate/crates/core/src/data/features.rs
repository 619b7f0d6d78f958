use ndarray::{s, Array3, ArrayView3, Axis};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::TrajectoryBatch;
use crate::sim::TacticLabel;

/// Feature tensor `[instance, time, feature]` with the per-step block
/// layout `[Px_1..Px_N, Py_1..Py_N, Vx_1..Vx_N, Vy_1..Vy_N]`: positions in
/// the first half of the features, velocities in the second.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub data: Array3<f32>,
    pub n_agents: usize,
}

impl FeatureTensor {
    pub fn new(data: Array3<f32>, n_agents: usize) -> Result<Self> {
        if data.shape()[2] != 4 * n_agents {
            return Err(Error::shape(
                format!("{} features for {n_agents} agents", 4 * n_agents),
                data.shape()[2],
            ));
        }
        Ok(Self { data, n_agents })
    }

    pub fn instances(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn time(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn features(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn view(&self) -> ArrayView3<'_, f32> {
        self.data.view()
    }

    /// Gathers the given instances in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            data: self.data.select(Axis(0), indices),
            n_agents: self.n_agents,
        }
    }

    pub fn is_position_feature(&self, feature: usize) -> bool {
        feature < 2 * self.n_agents
    }
}

/// Lengths seen before truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationStats {
    pub min_len: usize,
    pub mean_len: f64,
    pub max_len: usize,
}

/// Cuts every instance to the shortest engagement and lays the attacker
/// states out as features. Returns the tensor, the per-instance tactics and
/// the pre-truncation length statistics.
pub fn truncate_to_shortest(batch: &TrajectoryBatch) -> Result<(FeatureTensor, Vec<TacticLabel>, TruncationStats)> {
    let records = &batch.records;
    if records.is_empty() {
        return Err(Error::data("cannot truncate an empty batch"));
    }
    let n = batch.n_attackers();
    let min_len = records.iter().map(|r| r.steps).min().unwrap();
    let max_len = records.iter().map(|r| r.steps).max().unwrap();
    let mean_len = records.iter().map(|r| r.steps as f64).sum::<f64>() / records.len() as f64;
    if min_len == 0 {
        return Err(Error::data("batch contains an empty trajectory"));
    }

    let mut data = Array3::<f32>::zeros((records.len(), min_len, 4 * n));
    for (mut inst, rec) in data.outer_iter_mut().zip(records) {
        for t in 0..min_len {
            for a in 0..n {
                let [px, py, vx, vy] = rec.state(n, t, a);
                inst[[t, a]] = px;
                inst[[t, n + a]] = py;
                inst[[t, 2 * n + a]] = vx;
                inst[[t, 3 * n + a]] = vy;
            }
        }
    }
    let tactics = records.iter().map(|r| r.tactic).collect();
    Ok((
        FeatureTensor::new(data, n)?,
        tactics,
        TruncationStats {
            min_len,
            mean_len,
            max_len,
        },
    ))
}

/// Observation window: a prefix of the engagement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Steps(usize),
    Full,
}

impl Window {
    pub fn resolve(self, available: usize) -> Result<usize> {
        match self {
            Window::Full => Ok(available),
            Window::Steps(0) => Err(Error::config("window length must be positive")),
            Window::Steps(n) if n > available => Err(Error::data(format!(
                "window of {n} steps exceeds the {available} available"
            ))),
            Window::Steps(n) => Ok(n),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Full => f.write_str("full"),
            Window::Steps(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(Window::Full);
        }
        s.parse::<usize>()
            .map(Window::Steps)
            .map_err(|_| Error::config(format!("window must be a step count or 'full', got '{s}'")))
    }
}

/// Keeps the first `window` steps of every instance.
pub fn window(features: &FeatureTensor, window: Window) -> Result<FeatureTensor> {
    let len = window.resolve(features.time())?;
    Ok(FeatureTensor {
        data: features.data.slice(s![.., ..len, ..]).to_owned(),
        n_agents: features.n_agents,
    })
}
