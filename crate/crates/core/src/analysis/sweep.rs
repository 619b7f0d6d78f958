//! Experiment sweeps. Every cell trains a fresh model from the same
//! training seed, so a sweep is a pure function of its inputs.

use log::info;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use super::metrics::{evaluate, HeadMetrics, MetricsReport};
use crate::data::{build_dataset, generate_batch, Dataset, DatasetConfig, OutputKind, SplitName, Window};
use crate::error::{Error, Result};
use crate::io::TrajectoryBatch;
use crate::nn::{train, Architecture, Model, ModelSpec, TrainConfig, TrainReport};
use crate::sim::{EngagementConfig, TacticLabel};

/// One model configuration in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub arch: Architecture,
    pub output: OutputKind,
}

impl ModelEntry {
    pub fn new(arch: Architecture, output: OutputKind) -> Self {
        Self { arch, output }
    }

    pub fn spec_for(&self, data: &Dataset) -> ModelSpec {
        ModelSpec::new(self.arch, self.output, data.time(), data.features.features())
    }
}

impl fmt::Display for ModelEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.arch, self.output.short())
    }
}

impl FromStr for ModelEntry {
    type Err = Error;
    /// `cnn-mh`, `fcn-mc`, `logreg-ml`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (arch, output) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::config(format!("model entry '{s}' is not <model>-<output>")))?;
        Ok(Self::new(arch.parse()?, output.parse()?))
    }
}

/// A trained model with its scores on the test split.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: Model,
    pub train: TrainReport,
    pub test: MetricsReport,
}

/// Trains on the train split with early stopping on the validation split
/// and scores the restored weights on the test split.
pub fn fit_and_score(entry: ModelEntry, data: &Dataset, cfg: &TrainConfig) -> Result<Fitted> {
    let mut model = Model::new(entry.spec_for(data), cfg.seed)?;
    let report = train(
        &mut model,
        &data.split(SplitName::Train),
        &data.split(SplitName::Val),
        cfg,
    )?;
    let mut test = evaluate(&model, &data.split(SplitName::Test))?;
    test.val_loss = Some(report.best_val_loss.combined);
    test.epochs_trained = Some(report.epochs_trained);
    Ok(Fitted {
        model,
        train: report,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Observation window length in steps.
    Window,
    /// Noise factor in percent.
    Noise,
    /// Agents per side.
    Size,
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window" => Ok(SweepAxis::Window),
            "noise" => Ok(SweepAxis::Noise),
            "size" => Ok(SweepAxis::Size),
            other => Err(Error::config(format!("unknown sweep kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis: f64,
    pub model: ModelEntry,
    pub params: usize,
    pub seconds: f64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// Strictly increasing.
    pub values: Vec<f64>,
    pub cells: Vec<SweepCell>,
    pub seconds: f64,
}

/// One CSV line: a single head of a single cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    pub model: String,
    pub head: String,
    pub accuracy: f64,
    pub acc_adj: f64,
    pub ner: f64,
    pub val_loss: f64,
    pub params: usize,
    pub seconds: f64,
}

impl SweepResult {
    pub fn cell(&self, axis: f64, model: ModelEntry) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.axis == axis && c.model == model)
    }

    /// With `timing` off the seconds column is written as 0 so that reruns
    /// produce identical bytes.
    pub fn rows(&self, timing: bool) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for c in &self.cells {
            let heads: [(&str, Option<HeadMetrics>); 3] = [
                ("tactic", c.report.tactic),
                ("comms", c.report.comms),
                ("pronav", c.report.pronav),
            ];
            for (name, head) in heads {
                if let Some(h) = head {
                    rows.push(SweepRow {
                        axis: c.axis,
                        model: c.model.to_string(),
                        head: name.into(),
                        accuracy: h.accuracy,
                        acc_adj: h.adjusted,
                        ner: h.normalized_error,
                        val_loss: c.report.val_loss.unwrap_or(f64::NAN),
                        params: c.params,
                        seconds: if timing { c.seconds } else { 0.0 },
                    });
                }
            }
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, w: W, timing: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in self.rows(timing) {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn ensure_increasing(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one axis value"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(format!(
            "sweep axis values must be strictly increasing: {values:?}"
        )));
    }
    Ok(())
}

fn run_cells(
    models: &[ModelEntry],
    axis: f64,
    data: &Dataset,
    cfg: &TrainConfig,
    cells: &mut Vec<SweepCell>,
) -> Result<()> {
    for &entry in models {
        let started = Instant::now();
        let fitted = fit_and_score(entry, data, cfg)?;
        let seconds = started.elapsed().as_secs_f64();
        info!(
            "{entry} at {axis}: tactic {:?} val loss {:.4}",
            fitted.test.tactic.map(|h| h.accuracy),
            fitted.train.best_val_loss.combined
        );
        cells.push(SweepCell {
            axis,
            model: entry,
            params: fitted.model.param_count(),
            seconds,
            report: fitted.test,
        });
    }
    Ok(())
}

/// Same trajectories, different observation windows.
pub fn sweep_window(
    models: &[ModelEntry],
    batch: &TrajectoryBatch,
    base: &DatasetConfig,
    windows: &[Window],
    cfg: &TrainConfig,
) -> Result<SweepResult> {
    let started = Instant::now();
    let mut datasets = Vec::with_capacity(windows.len());
    for &w in windows {
        let data = build_dataset(
            batch,
            &DatasetConfig {
                window: w,
                ..base.clone()
            },
        )?;
        datasets.push((data.time() as f64, data));
    }
    let values: Vec<f64> = datasets.iter().map(|(v, _)| *v).collect();
    ensure_increasing(&values)?;
    let mut cells = Vec::new();
    for (v, data) in &datasets {
        run_cells(models, *v, data, cfg, &mut cells)?;
    }
    Ok(SweepResult {
        axis: SweepAxis::Window,
        values,
        cells,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Same trajectories, different noise factors.
pub fn sweep_noise(
    models: &[ModelEntry],
    batch: &TrajectoryBatch,
    base: &DatasetConfig,
    factors: &[f64],
    cfg: &TrainConfig,
) -> Result<SweepResult> {
    ensure_increasing(factors)?;
    let started = Instant::now();
    let mut cells = Vec::new();
    for &factor in factors {
        let data = build_dataset(
            batch,
            &DatasetConfig {
                noise_factor: factor,
                ..base.clone()
            },
        )?;
        run_cells(models, factor, &data, cfg, &mut cells)?;
    }
    Ok(SweepResult {
        axis: SweepAxis::Noise,
        values: factors.to_vec(),
        cells,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Fresh trajectories per swarm size (`n` attackers against `n` defenders).
pub fn sweep_swarmsize(
    models: &[ModelEntry],
    sizes: &[usize],
    engagement: &EngagementConfig,
    per_tactic: usize,
    master_seed: u64,
    base: &DatasetConfig,
    cfg: &TrainConfig,
) -> Result<SweepResult> {
    let values: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    ensure_increasing(&values)?;
    let started = Instant::now();
    let mut cells = Vec::new();
    for &n in sizes {
        let batch = generate_batch(
            &engagement.clone().with_size(n, n),
            &TacticLabel::ALL,
            per_tactic,
            master_seed,
        )?;
        let data = build_dataset(&batch, base)?;
        run_cells(models, n as f64, &data, cfg, &mut cells)?;
    }
    Ok(SweepResult {
        axis: SweepAxis::Size,
        values,
        cells,
        seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_entry_round_trip() {
        for s in ["cnn-mh", "fcn-mc", "logreg-ml", "fc-mh"] {
            assert_eq!(s.parse::<ModelEntry>().unwrap().to_string(), s);
        }
        assert!("cnn".parse::<ModelEntry>().is_err());
        assert!("rnn-mh".parse::<ModelEntry>().is_err());
    }

    #[test]
    fn axis_must_increase() {
        assert!(ensure_increasing(&[0.0, 10.0, 20.0]).is_ok());
        assert!(ensure_increasing(&[0.0, 0.0]).is_err());
        assert!(ensure_increasing(&[]).is_err());
    }
}
