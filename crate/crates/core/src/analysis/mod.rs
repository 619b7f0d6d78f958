//! Metrics, PCA and experiment sweeps.

mod metrics;
mod opening;
mod pca;
mod sweep;

pub use metrics::{accuracy_metrics, confusion, evaluate, Confusion, HeadMetrics, MetricsReport};
pub use opening::{opening_moves, OpeningMoves, OpeningRow, Step0Check};
pub use pca::{flatten_rows, pca_project, Pca};
pub use sweep::{
    fit_and_score, sweep_noise, sweep_swarmsize, sweep_window, Fitted, ModelEntry, SweepAxis, SweepCell, SweepResult,
    SweepRow,
};
