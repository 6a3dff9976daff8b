use serde::{Deserialize, Serialize};

use super::treeshap::{shap_matrix, ShapMatrix};
use crate::error::{Error, Result};
use crate::eval::CvRun;
use crate::gbdt::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub feature: String,
    pub score: f64,
}

/// Features by descending fold-averaged mean |SHAP|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<RankEntry>,
}

impl ImportanceRanking {
    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.feature.clone()).collect()
    }

    pub fn top(&self, k: usize) -> Vec<String> {
        self.entries.iter().take(k).map(|e| e.feature.clone()).collect()
    }

    /// 1-based rank of a feature.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature).map(|p| p + 1)
    }
}

/// Scores each feature by the mean over folds of its mean |SHAP| within the
/// fold; ties are ordered by feature name.
pub fn rank_features(folds: &[ShapMatrix]) -> Result<ImportanceRanking> {
    let first = folds
        .first()
        .ok_or_else(|| Error::InsufficientData("ranking needs at least one SHAP matrix".into()))?;
    let m = first.feature_names.len();
    let mut score = vec![0.0; m];
    for f in folds {
        if f.feature_names != first.feature_names {
            return Err(Error::Schema("SHAP matrices disagree on features".into()));
        }
        for (s, v) in score.iter_mut().zip(f.mean_abs()) {
            *s += v;
        }
    }
    let mut entries: Vec<RankEntry> = first
        .feature_names
        .iter()
        .zip(score)
        .map(|(name, s)| RankEntry {
            feature: name.clone(),
            score: s / folds.len() as f64,
        })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.feature.cmp(&b.feature)));
    Ok(ImportanceRanking { entries })
}

/// SHAP of every fold model on its own held-out rows, row ids being indices
/// into `x`.
pub fn fold_shap(run: &CvRun, x: &FeatureMatrix) -> Result<Vec<ShapMatrix>> {
    run.models
        .iter()
        .zip(&run.test_rows)
        .map(|(model, rows)| shap_matrix(model, x, rows))
        .collect()
}
