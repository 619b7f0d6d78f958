use log::warn;
use ndarray::Axis;
use serde::{Deserialize, Serialize};

use super::FeatureTensor;
use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature z-score statistics, computed on the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Mean and population standard deviation per feature over every
    /// (instance, time) row.
    pub fn fit(features: &FeatureTensor) -> Result<Self> {
        let f = features.features();
        let rows = features.instances() * features.time();
        if rows == 0 {
            return Err(Error::data("cannot fit normalization on an empty split"));
        }
        let mut sum = vec![0f64; f];
        for row in features
            .data
            .view()
            .into_shape_with_order((rows, f))
            .unwrap()
            .outer_iter()
        {
            for (s, &v) in sum.iter_mut().zip(row) {
                *s += v as f64;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / rows as f64).collect();
        let mut sq = vec![0f64; f];
        for row in features
            .data
            .view()
            .into_shape_with_order((rows, f))
            .unwrap()
            .outer_iter()
        {
            for ((s, &v), m) in sq.iter_mut().zip(row).zip(&mean) {
                let d = v as f64 - m;
                *s += d * d;
            }
        }
        let mut floored = 0;
        let std = sq
            .iter()
            .map(|s| {
                let sd = (s / rows as f64).sqrt();
                if sd < STD_FLOOR {
                    floored += 1;
                    STD_FLOOR
                } else {
                    sd
                }
            })
            .collect();
        if floored > 0 {
            warn!("{floored} zero-variance feature(s); std floored at {STD_FLOOR}");
        }
        Ok(Self { mean, std })
    }
}

/// Applies `(x - mean) / std` per feature column.
pub fn normalize(features: &FeatureTensor, stats: &NormStats) -> Result<FeatureTensor> {
    if stats.mean.len() != features.features() {
        return Err(Error::shape(
            format!("{} features", stats.mean.len()),
            features.features(),
        ));
    }
    let mut out = features.clone();
    for mut lane in out.data.lanes_mut(Axis(2)) {
        for ((v, m), s) in lane.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = ((*v as f64 - m) / s) as f32;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn tensor(f: impl Fn(usize, usize, usize) -> f32) -> FeatureTensor {
        FeatureTensor::new(Array3::from_shape_fn((6, 5, 4), |(i, t, k)| f(i, t, k)), 1).unwrap()
    }

    #[test]
    fn training_split_is_standardized() {
        let x = tensor(|i, t, k| (i * 7 + t * 3) as f32 * (k as f32 + 1.0) + k as f32 * 40.0);
        let stats = NormStats::fit(&x).unwrap();
        let z = normalize(&x, &stats).unwrap();
        let again = NormStats::fit(&z).unwrap();
        for (m, s) in again.mean.iter().zip(&again.std) {
            assert!(m.abs() < 1e-6, "mean {m}");
            assert!((s - 1.0).abs() < 1e-3, "std {s}");
        }
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let x = tensor(|i, t, k| if k == 2 { 3.5 } else { (i + t) as f32 });
        let stats = NormStats::fit(&x).unwrap();
        assert_eq!(stats.std[2], STD_FLOOR);
        let z = normalize(&x, &stats).unwrap();
        assert!(z.data.index_axis(Axis(2), 2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn other_splits_use_training_stats() {
        let train = tensor(|i, t, _| (i + t) as f32);
        let test = tensor(|i, t, _| (i + t) as f32 + 10.0);
        let stats = NormStats::fit(&train).unwrap();
        let z = normalize(&test, &stats).unwrap();
        let m = NormStats::fit(&z).unwrap().mean;
        assert!(m.iter().all(|&m| m > 1.0));
    }

    proptest::proptest! {
        #[test]
        fn stats_survive_json_exactly(
            mean in proptest::collection::vec(proptest::num::f64::NORMAL, 1..16),
            std in proptest::collection::vec(1e-8f64..1e3, 1..16),
        ) {
            let stats = NormStats { mean, std };
            let back: NormStats = serde_json::from_str(&serde_json::to_string(&stats).unwrap()).unwrap();
            proptest::prop_assert_eq!(back, stats);
        }
    }
}
