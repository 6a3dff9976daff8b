//! Shapley attributions, importance ranking and ranked feature selection.

pub mod ranking;
pub mod selection;
pub mod treeshap;

pub use ranking::{fold_shap, rank_features, ImportanceRanking, RankEntry};
pub use selection::{incremental_selection, select_k, top_k_columns, SelectionPoint, SelectionResult};
pub use treeshap::{expected_value, shap_matrix, tree_shap, tree_shap_into, RowShap, ShapMatrix};
