//! The 21-feature window dataset: schema, label attachment, extraction from
//! sessions and CSV persistence.

mod build;
mod io;

pub use build::{attach_labels, build_dataset, build_dataset_from_dirs, session_rows, FeatureParams};
pub use io::{load_dataset, parse_dataset, save_dataset, write_dataset};

use crate::error::{Error, Result};
use crate::gbdt::{FeatureKind, FeatureMatrix};

pub const N_FEATURES: usize = 21;

/// Feature names in their canonical column order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "age",
    "avKnowledge",
    "gender",
    "mean_gsr",
    "mean_HR",
    "mean_HRV",
    "number_of_fixations_center",
    "number_of_fixations_game",
    "number_of_fixations_left",
    "number_of_fixations_right",
    "number_of_fixations_odometer",
    "mean_dispersion_center",
    "mean_dispersion_game",
    "mean_dispersion_left",
    "mean_dispersion_right",
    "mean_dispersion_odometer",
    "mean_duration_center",
    "mean_duration_game",
    "mean_duration_left",
    "mean_duration_right",
    "mean_duration_odometer",
];

pub const GENDERS: [&str; 2] = ["female", "male"];
pub const AV_KNOWLEDGE_LEVELS: [&str; 4] = ["none", "low", "moderate", "high"];

pub const AGE: usize = 0;
pub const AV_KNOWLEDGE: usize = 1;
pub const GENDER: usize = 2;
pub const MEAN_GSR: usize = 3;
pub const MEAN_HR: usize = 4;
pub const MEAN_HRV: usize = 5;
pub const FIXATION_COUNT_BASE: usize = 6;
pub const DISPERSION_BASE: usize = 11;
pub const DURATION_BASE: usize = 16;

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

pub fn feature_kind(index: usize) -> FeatureKind {
    match index {
        GENDER => FeatureKind::Categorical {
            n_categories: GENDERS.len() as u32,
        },
        AV_KNOWLEDGE => FeatureKind::Categorical {
            n_categories: AV_KNOWLEDGE_LEVELS.len() as u32,
        },
        _ => FeatureKind::Numeric,
    }
}

/// Vocabulary of a categorical feature.
pub fn vocabulary(index: usize) -> Option<&'static [&'static str]> {
    match index {
        GENDER => Some(&GENDERS),
        AV_KNOWLEDGE => Some(&AV_KNOWLEDGE_LEVELS),
        _ => None,
    }
}

pub fn is_count_feature(index: usize) -> bool {
    (FIXATION_COUNT_BASE..DISPERSION_BASE).contains(&index)
}

pub(crate) fn category_id(index: usize, label: &str) -> Result<f64> {
    let vocab = vocabulary(index).expect("categorical feature");
    vocab.iter().position(|v| *v == label).map(|p| p as f64).ok_or_else(|| {
        Error::Schema(format!(
            "`{label}` is not a valid {} (expected one of {})",
            FEATURE_NAMES[index],
            vocab.join(", ")
        ))
    })
}

/// One labeled window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub participant_id: String,
    pub drive_id: String,
    pub window_index: usize,
    /// Values in [`FEATURE_NAMES`] order; categorical features hold their
    /// category id.
    pub values: [Option<f64>; N_FEATURES],
    pub sa_label: u8,
}

impl FeatureRow {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).and_then(|i| self.values[i])
    }

    fn sort_key(&self) -> (&str, &str, usize) {
        (&self.participant_id, &self.drive_id, self.window_index)
    }
}

/// Rows ordered by `(participant_id, drive_id, window_index)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: Vec<FeatureRow>,
}

impl Dataset {
    pub fn new(mut rows: Vec<FeatureRow>) -> Result<Dataset> {
        for r in &rows {
            if r.sa_label > 3 {
                return Err(Error::Schema(format!("SA label {} outside 0..=3", r.sa_label)));
            }
        }
        rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(Dataset { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sa_label as f64).collect()
    }

    pub fn column(&self, index: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.values[index]).collect()
    }

    /// Participant of every row, for grouped fold assignment.
    pub fn participants(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.participant_id.as_str()).collect()
    }

    /// All 21 features as a model matrix; missing values become `NaN`.
    pub fn to_matrix(&self) -> FeatureMatrix {
        let all: Vec<usize> = (0..N_FEATURES).collect();
        self.to_matrix_subset(&all)
    }

    /// Selected feature columns, in the given order.
    pub fn to_matrix_subset(&self, features: &[usize]) -> FeatureMatrix {
        let names = features.iter().map(|&j| FEATURE_NAMES[j].to_string()).collect();
        let kinds = features.iter().map(|&j| feature_kind(j)).collect();
        let columns = features
            .iter()
            .map(|&j| self.rows.iter().map(|r| r.values[j].unwrap_or(f64::NAN)).collect())
            .collect();
        FeatureMatrix::new(names, kinds, columns).expect("dataset values respect the schema")
    }
}

/// Indices of named features, in the order given.
pub fn resolve_features(names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| feature_index(n).ok_or_else(|| Error::Schema(format!("unknown feature `{n}`"))))
        .collect()
}
