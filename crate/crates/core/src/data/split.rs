use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::sim::TacticLabel;

/// Train/validation/test fractions of the whole dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.60,
            val: 0.15,
            test: 0.25,
        }
    }
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        let sum = self.train + self.val + self.test;
        if self.train <= 0.0 || self.val < 0.0 || self.test < 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("split fractions must be non-negative and sum to 1"));
        }
        Ok(())
    }

    /// Per-class counts `(train, val, test)` for `n` instances of a class.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let train = (self.train * n as f64).round() as usize;
        let val = ((self.val * n as f64).round() as usize).min(n - train);
        (train, val, n - train - val)
    }
}

/// Instance indices for each split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each tactic is shuffled and cut by the spec fractions,
/// then each split is shuffled. Every tactic must have the same count.
pub fn split_shuffle(tactics: &[TacticLabel], spec: &SplitSpec, seed: u64) -> Result<SplitIndices> {
    spec.validate()?;
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); 4];
    for (i, t) in tactics.iter().enumerate() {
        per_class[t.id() as usize].push(i);
    }
    let present: Vec<&Vec<usize>> = per_class.iter().filter(|c| !c.is_empty()).collect();
    let Some(first) = present.first() else {
        return Err(Error::data("cannot split an empty dataset"));
    };
    let n = first.len();
    if present.iter().any(|c| c.len() != n) {
        let counts: Vec<usize> = per_class.iter().map(Vec::len).collect();
        return Err(Error::data(format!("unequal per-tactic counts {counts:?}")));
    }

    let (n_train, n_val, _) = spec.counts(n);
    let mut out = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (class, members) in per_class.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut idx = members.clone();
        idx.shuffle(&mut rng::child(seed, Purpose::Split, class as u64));
        out.train.extend_from_slice(&idx[..n_train]);
        out.val.extend_from_slice(&idx[n_train..n_train + n_val]);
        out.test.extend_from_slice(&idx[n_train + n_val..]);
    }
    let mut shuffle_rng = rng::child(seed, Purpose::Split, 100);
    out.train.shuffle(&mut shuffle_rng);
    out.val.shuffle(&mut shuffle_rng);
    out.test.shuffle(&mut shuffle_rng);
    Ok(out)
}
