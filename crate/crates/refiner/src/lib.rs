//! Learned and direct refinement of initial UV layouts.

pub mod adam;
pub mod checkpoint;
pub mod direct;
pub mod features;
pub mod model;
pub mod synthetic;
pub mod tape;
pub mod train;

pub use checkpoint::Checkpoint;
pub use direct::{direct_refine, DirectOutcome, DirectWeights};
pub use features::{FeaturePack, FeatureStats};
pub use model::{forward, forward_backward, graph_features, ArchConfig, Prediction, RefinerParams};
pub use synthetic::{make_synthetic_pair, synthetic_dataset, Pair};
pub use train::{train, TrainConfig, TrainOutcome};
