//! Histogram-based gradient-boosted regression trees grown leaf-wise.

pub mod binning;
pub mod data;
pub mod goss;
pub mod params;
pub mod split;
pub mod train;
pub mod tree;

pub use binning::{BinMapper, BinnedMatrix};
pub use data::{FeatureKind, FeatureMatrix};
pub use goss::{goss_sample, GossSample};
pub use params::{GossParams, TrainParams};
pub use split::{find_best_split, find_best_split_for_rows, NodeStats, SplitCandidate, SplitConstraints, SplitRule};
pub use train::{train, train_detailed, TrainHistory, TrainOutput};
pub use tree::{predict, Ensemble, Node, Tree};
