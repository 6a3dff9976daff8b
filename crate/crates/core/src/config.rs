//! Pipeline configuration, read from TOML. Every field has a default and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{CvConfig, MAX_EFFECT_BINS};
use crate::featureset::{FeatureParams, N_FEATURES};
use crate::gbdt::TrainParams;
use crate::synthgen::SynthConfig;

/// Where stage artifacts live. `sessions` and `dataset` default to
/// locations inside `out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub out: PathBuf,
    pub sessions: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            out: PathBuf::from("out"),
            sessions: None,
            dataset: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub k_min: usize,
    /// Largest subset tried; all features when absent.
    pub k_max: Option<usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { k_min: 1, k_max: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffectsConfig {
    pub max_bins: usize,
}

impl Default for EffectsConfig {
    fn default() -> Self {
        EffectsConfig {
            max_bins: MAX_EFFECT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Master seed; when set it replaces the generator, fold and training
    /// seeds.
    pub seed: Option<u64>,
    pub paths: PathsConfig,
    pub synth: SynthConfig,
    pub features: FeatureParams,
    pub train: TrainParams,
    pub cv: CvConfig,
    pub selection: SelectionConfig,
    pub effects: EffectsConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        if let Some(seed) = cfg.seed {
            cfg.set_seed(seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Uses `seed` for the generator, the fold shuffle and training.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.synth.seed = seed;
        self.cv.seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Config(m) | Error::InvalidParam(m) => Error::Config(m),
            other => other,
        };
        self.synth.validate().map_err(cfg_err)?;
        self.features.validate().map_err(cfg_err)?;
        self.train.validate().map_err(cfg_err)?;
        if self.cv.k < 2 {
            return Err(Error::Config(format!("cv.k = {} must be at least 2", self.cv.k)));
        }
        let k_max = self.selection.k_max.unwrap_or(N_FEATURES);
        if self.selection.k_min < 1 || self.selection.k_min > k_max || k_max > N_FEATURES {
            return Err(Error::Config(format!(
                "selection range {}..={k_max} must lie within 1..={N_FEATURES}",
                self.selection.k_min
            )));
        }
        if self.effects.max_bins == 0 {
            return Err(Error::Config("effects.max_bins must be positive".into()));
        }
        Ok(())
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.paths
            .sessions
            .clone()
            .unwrap_or_else(|| self.paths.out.join("sessions"))
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.paths
            .dataset
            .clone()
            .unwrap_or_else(|| self.paths.out.join("dataset.csv"))
    }

    pub fn k_range(&self) -> std::ops::RangeInclusive<usize> {
        self.selection.k_min..=self.selection.k_max.unwrap_or(N_FEATURES)
    }
}
