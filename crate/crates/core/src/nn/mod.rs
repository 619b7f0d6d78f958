//! From-scratch classifiers: layers, heads, losses and training.

mod checkpoint;
pub mod layers;
pub mod loss;
mod model;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};
pub use layers::{Act, Conv1d, Dense, Layer};
pub use loss::{LossValue, LossWeights};
pub use model::{
    attribute_targets, decode, to_batch, Architecture, ForwardPass, Gradients, HeadOutputs, Model, ModelSpec,
    Predictions, N_ATTRIBUTES, N_TACTICS,
};
pub use train::{batch_gradients, evaluate_loss, predict_split, train, EpochRecord, Sgd, TrainConfig, TrainReport};
