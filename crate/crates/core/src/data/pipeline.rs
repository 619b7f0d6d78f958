//! Trajectory generation and dataset assembly.
//!
//! Order of operations is fixed: truncate -> split -> window -> noise ->
//! normalize, with normalization statistics fitted on the training split.

use ndarray::{Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::noise::noise_in_place;
use super::{
    normalize, split_shuffle, truncate_to_shortest, window, FeatureTensor, NoiseSpec, NormStats, SplitIndices,
    SplitSpec, TruncationStats, Window,
};
use crate::error::{Error, Result};
use crate::io::{put_f32s, read_frame, write_frame, Cursor, TrajectoryBatch, TrajectoryRecord};
use crate::rng;
use crate::sim::{run_engagement, EngagementConfig, TacticLabel};

/// Simulates `per_tactic` engagements of each listed tactic. Instance `k`
/// uses tactic `tactics[k % len]` and seed `child_seed(master_seed, k)`, so
/// any instance can be regenerated alone. Runs in parallel; the result does
/// not depend on the thread count.
pub fn generate_batch(
    base: &EngagementConfig,
    tactics: &[TacticLabel],
    per_tactic: usize,
    master_seed: u64,
) -> Result<TrajectoryBatch> {
    base.validate()?;
    if tactics.is_empty() {
        return Err(Error::config("at least one tactic is required"));
    }
    let total = tactics.len() * per_tactic;
    let records = (0..total)
        .into_par_iter()
        .map(|k| {
            let seed = rng::child_seed(master_seed, k as u64);
            let cfg = base.clone().with_seed(seed).with_tactic(tactics[k % tactics.len()]);
            run_engagement(&cfg).map(|t| TrajectoryRecord::from_trajectory(&t, seed))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryBatch {
        config: base.clone(),
        records,
    })
}

/// Which splits receive noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseProtocol {
    /// Train, validation and test all carry noise of the same factor.
    #[default]
    Matched,
    /// Only the test split carries noise.
    CleanTrain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub window: Window,
    pub noise_factor: f64,
    #[serde(default)]
    pub noise_protocol: NoiseProtocol,
    pub split: SplitSpec,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            window: Window::Full,
            noise_factor: 0.0,
            noise_protocol: NoiseProtocol::Matched,
            split: SplitSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

/// Normalized, split, model-ready data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub truncation: TruncationStats,
    pub n_defenders: usize,
    pub norm: NormStats,
    /// All instances, normalized with `norm`.
    pub features: FeatureTensor,
    pub tactics: Vec<TacticLabel>,
    pub splits: SplitIndices,
}

/// One split materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub features: FeatureTensor,
    pub tactics: Vec<TacticLabel>,
}

impl SplitData {
    pub fn len(&self) -> usize {
        self.tactics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tactics.is_empty()
    }
}

impl Dataset {
    pub fn n_agents(&self) -> usize {
        self.features.n_agents
    }

    pub fn time(&self) -> usize {
        self.features.time()
    }

    pub fn indices(&self, which: SplitName) -> &[usize] {
        match which {
            SplitName::Train => &self.splits.train,
            SplitName::Val => &self.splits.val,
            SplitName::Test => &self.splits.test,
        }
    }

    pub fn split(&self, which: SplitName) -> SplitData {
        let idx = self.indices(which);
        SplitData {
            features: self.features.select(idx),
            tactics: idx.iter().map(|&i| self.tactics[i]).collect(),
        }
    }
}

/// Runs the full pipeline on a trajectory batch.
pub fn build_dataset(batch: &TrajectoryBatch, config: &DatasetConfig) -> Result<Dataset> {
    let (raw, tactics, truncation) = truncate_to_shortest(batch)?;
    build_from_features(&raw, tactics, truncation, batch.n_defenders(), config)
}

/// Pipeline from an already truncated raw tensor. Lets sweeps reuse one
/// truncation across windows and noise levels.
pub fn build_from_features(
    raw: &FeatureTensor,
    tactics: Vec<TacticLabel>,
    truncation: TruncationStats,
    n_defenders: usize,
    config: &DatasetConfig,
) -> Result<Dataset> {
    if tactics.len() != raw.instances() {
        return Err(Error::shape(raw.instances(), tactics.len()));
    }
    let splits = split_shuffle(&tactics, &config.split, config.seed)?;
    let mut windowed = window(raw, config.window)?;

    let spec = NoiseSpec::new(config.noise_factor, config.seed)?;
    if spec.factor > 0.0 {
        let mut noisy = vec![config.noise_protocol == NoiseProtocol::Matched; raw.instances()];
        for &i in &splits.test {
            noisy[i] = true;
        }
        let n_agents = windowed.n_agents;
        windowed
            .data
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .filter(|(i, _)| noisy[*i])
            .for_each(|(i, inst)| noise_in_place(inst, n_agents, &spec, i as u64));
    }

    let norm = NormStats::fit(&windowed.select(&splits.train))?;
    let features = normalize(&windowed, &norm)?;
    Ok(Dataset {
        config: config.clone(),
        truncation,
        n_defenders,
        norm,
        features,
        tactics,
        splits,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetHeader {
    kind: String,
    instances: usize,
    time: usize,
    features: usize,
    n_attackers: usize,
    n_defenders: usize,
    config: DatasetConfig,
    truncation: TruncationStats,
    norm: NormStats,
    splits: SplitIndices,
}

impl Dataset {
    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let header = DatasetHeader {
            kind: "dataset".into(),
            instances: self.features.instances(),
            time: self.features.time(),
            features: self.features.features(),
            n_attackers: self.n_agents(),
            n_defenders: self.n_defenders,
            config: self.config.clone(),
            truncation: self.truncation,
            norm: self.norm.clone(),
            splits: self.splits.clone(),
        };
        let mut payload = Vec::with_capacity(self.features.data.len() * 4 + 3 * self.tactics.len());
        put_f32s(&mut payload, self.features.data.iter().copied());
        payload.extend(self.tactics.iter().map(|t| t.id()));
        payload.extend(self.tactics.iter().flat_map(|t| t.attributes()));
        write_frame(w, &header, &payload)
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let (h, payload): (DatasetHeader, _) = read_frame(r)?;
        if h.kind != "dataset" {
            return Err(Error::Format(format!(
                "expected a dataset container, found '{}'",
                h.kind
            )));
        }
        let mut cur = Cursor::new(&payload);
        let values = cur.f32s(h.instances * h.time * h.features)?;
        let ids = cur.u8s(h.instances)?;
        let attrs = cur.u8s(h.instances * 2)?;
        cur.finish()?;
        let tactics = ids
            .iter()
            .map(|&id| TacticLabel::from_id(id))
            .collect::<Result<Vec<_>>>()?;
        for (t, a) in tactics.iter().zip(attrs.chunks_exact(2)) {
            if t.attributes() != [a[0], a[1]] {
                return Err(Error::Format("attribute labels disagree with tactic ids".into()));
            }
        }
        let data = Array3::from_shape_vec((h.instances, h.time, h.features), values)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self {
            config: h.config,
            truncation: h.truncation,
            n_defenders: h.n_defenders,
            norm: h.norm,
            features: FeatureTensor::new(data, h.n_attackers)?,
            tactics,
            splits: h.splits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_batch() -> TrajectoryBatch {
        generate_batch(&EngagementConfig::default().with_size(3, 3), &TacticLabel::ALL, 10, 77).unwrap()
    }

    #[test]
    fn generation_is_reproducible_per_instance() {
        let base = EngagementConfig::default().with_size(3, 3);
        let b = small_batch();
        assert_eq!(b.records.len(), 40);
        let k = 13;
        let seed = rng::child_seed(77, k as u64);
        let alone = run_engagement(&base.clone().with_seed(seed).with_tactic(TacticLabel::ALL[k % 4])).unwrap();
        assert_eq!(b.records[k], TrajectoryRecord::from_trajectory(&alone, seed));
    }

    #[test]
    fn parallel_matches_serial() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let par = pool.install(small_batch);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let ser = pool1.install(small_batch);
        assert_eq!(par, ser);
    }

    #[test]
    fn dataset_round_trip_is_bit_identical() {
        let cfg = DatasetConfig {
            window: Window::Steps(20),
            noise_factor: 5.0,
            seed: 3,
            ..Default::default()
        };
        let ds = build_dataset(&small_batch(), &cfg).unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf).unwrap();
        let back = Dataset::read(&buf[..]).unwrap();
        assert_eq!(back, ds);
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn stats_ignore_test_instances() {
        let batch = small_batch();
        let cfg = DatasetConfig::default();
        let ds = build_dataset(&batch, &cfg).unwrap();
        let mut perturbed = batch.clone();
        let victim = ds.splits.test[0];
        for v in perturbed.records[victim].states.iter_mut() {
            *v += 100.0;
        }
        let ds2 = build_dataset(&perturbed, &cfg).unwrap();
        assert_eq!(ds.norm, ds2.norm);
        assert_ne!(ds.features, ds2.features);
    }

    #[test]
    fn clean_train_protocol_leaves_train_untouched() {
        let batch = small_batch();
        let clean = build_dataset(&batch, &DatasetConfig::default()).unwrap();
        let cfg = DatasetConfig {
            noise_factor: 20.0,
            noise_protocol: NoiseProtocol::CleanTrain,
            ..Default::default()
        };
        let ds = build_dataset(&batch, &cfg).unwrap();
        assert_eq!(ds.norm, clean.norm);
        assert_eq!(ds.split(SplitName::Train), clean.split(SplitName::Train));
        assert_ne!(ds.split(SplitName::Test), clean.split(SplitName::Test));
    }
}
