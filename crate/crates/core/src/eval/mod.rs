//! Cross-validation, regression metrics and feature-effect analysis.

pub mod cv;
pub mod effects;
pub mod metrics;

pub use cv::{
    fit_final, fold_assignment, grouped_fold_assignment, kfold_cv, CvConfig, CvReport, CvRun, FoldReport, OofPrediction,
};
pub use effects::{
    effect_bins_csv, effects_summary_csv, feature_effect_report, EffectBin, FeatureEffect, MAX_EFFECT_BINS,
};
pub use metrics::{mae, metrics, mid_ranks, pearson, rmse, spearman, spearman_test, Metrics, RankCorrelation};
