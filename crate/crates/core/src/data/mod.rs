//! Trajectory batches to model-ready tensors.

mod features;
mod labels;
mod noise;
mod normalize;
mod pipeline;
mod split;

pub use features::{truncate_to_shortest, window, FeatureTensor, TruncationStats, Window};
pub use labels::{make_labels, LabelSet, OutputKind};
pub use noise::{add_noise, NoiseSpec, POSITION_LENGTH, VELOCITY_LENGTH};
pub use normalize::{normalize, NormStats, STD_FLOOR};
pub use pipeline::{
    build_dataset, build_from_features, generate_batch, Dataset, DatasetConfig, NoiseProtocol, SplitData, SplitName,
};
pub use split::{split_shuffle, SplitIndices, SplitSpec};
