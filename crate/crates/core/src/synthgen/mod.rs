//! Deterministic synthetic studies with planted feature–label relationships.
//!
//! Generation runs backwards: each window first receives target values for
//! the physiological and gaze features, the SA label is drawn from a latent
//! score built on those values, and only then are raw streams rendered so
//! that the extractors recover the targets.

mod plan;
mod render;

pub use plan::{plan_study, DrivePlan, ParticipantPlan, PlannedFixation, StudyPlan, WindowPlan};
pub use render::render_session;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featureset::{feature_index, session_rows, Dataset, FeatureParams, FEATURE_NAMES, N_FEATURES};
use crate::session::{write_session, Session};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }
}

/// A feature whose standardized value enters the latent SA score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedEffect {
    pub feature: String,
    pub direction: Direction,
    pub strength: f64,
}

impl PlantedEffect {
    pub fn new(feature: &str, direction: Direction, strength: f64) -> Self {
        PlantedEffect {
            feature: feature.to_string(),
            direction,
            strength,
        }
    }
}

/// Heart rate up, phasic GSR up, game fixations up, center fixations down.
pub fn default_effects() -> Vec<PlantedEffect> {
    vec![
        PlantedEffect::new("mean_HR", Direction::Positive, 0.55),
        PlantedEffect::new("mean_gsr", Direction::Positive, 0.55),
        PlantedEffect::new("number_of_fixations_game", Direction::Positive, 0.55),
        PlantedEffect::new("number_of_fixations_center", Direction::Negative, 0.55),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_participants: usize,
    pub drives_per_participant: usize,
    /// Labeled windows across the study, spread as evenly as possible over
    /// drives (earlier drives take the remainder).
    pub total_windows: usize,
    /// Explicit per-drive window counts, participant-major; overrides
    /// `total_windows`.
    pub windows_per_drive: Option<Vec<usize>>,
    pub effects: Vec<PlantedEffect>,
    /// Standard deviation of the per-window latent noise.
    pub noise_sd: f64,
    /// Standard deviation of the per-participant latent offset.
    pub participant_sd: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_participants: 44,
            drives_per_participant: 2,
            total_windows: 1634,
            windows_per_drive: None,
            effects: default_effects(),
            noise_sd: 0.35,
            participant_sd: 0.15,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Single participant, single drive, `windows` windows.
    pub fn tiny(windows: usize, seed: u64) -> Self {
        SynthConfig {
            n_participants: 1,
            drives_per_participant: 1,
            total_windows: windows,
            seed,
            ..SynthConfig::default()
        }
    }

    pub fn n_drives(&self) -> usize {
        self.n_participants * self.drives_per_participant
    }

    /// Window count of every drive, participant-major.
    pub fn schedule(&self) -> Result<Vec<usize>> {
        let n = self.n_drives();
        if n == 0 {
            return Err(Error::Config(
                "synthetic study needs at least one participant and drive".into(),
            ));
        }
        let sched = match &self.windows_per_drive {
            Some(s) => {
                if s.len() != n {
                    return Err(Error::Config(format!(
                        "windows_per_drive lists {} drives, expected {n}",
                        s.len()
                    )));
                }
                s.clone()
            }
            None => {
                if self.total_windows < n {
                    return Err(Error::Config(format!(
                        "{} windows cannot cover {n} drives",
                        self.total_windows
                    )));
                }
                (0..n)
                    .map(|d| self.total_windows / n + usize::from(d < self.total_windows % n))
                    .collect()
            }
        };
        if sched.contains(&0) {
            return Err(Error::Config("every drive needs at least one window".into()));
        }
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sd {} must be non-negative",
                self.noise_sd
            )));
        }
        if !(self.participant_sd.is_finite() && self.participant_sd >= 0.0) {
            return Err(Error::Config(format!(
                "participant_sd {} must be non-negative",
                self.participant_sd
            )));
        }
        let mut seen = Vec::new();
        for e in &self.effects {
            if feature_index(&e.feature).is_none() {
                return Err(Error::Config(format!("effect on unknown feature `{}`", e.feature)));
            }
            if !e.strength.is_finite() || e.strength < 0.0 {
                return Err(Error::Config(format!(
                    "effect strength {} on `{}` must be finite and non-negative",
                    e.strength, e.feature
                )));
            }
            if seen.contains(&e.feature) {
                return Err(Error::Config(format!("feature `{}` planted twice", e.feature)));
            }
            seen.push(e.feature.clone());
        }
        Ok(())
    }
}

/// Intended window-level values and the latent score behind each label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthWindow {
    pub participant_id: String,
    pub drive_id: String,
    pub window_index: usize,
    pub sa_label: u8,
    pub latent: f64,
    /// Values in feature-table order; `None` where the feature is missing.
    pub intended: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub effects: Vec<PlantedEffect>,
    pub informative_features: Vec<String>,
    pub windows: Vec<GroundTruthWindow>,
}

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

impl GroundTruth {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<GroundTruth> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e))
    }

    pub fn from_plan(cfg: &SynthConfig, plan: &StudyPlan) -> GroundTruth {
        let mut windows = Vec::new();
        for p in &plan.participants {
            for d in &p.drives {
                for w in &d.windows {
                    windows.push(GroundTruthWindow {
                        participant_id: p.participant_id.clone(),
                        drive_id: d.drive_id.clone(),
                        window_index: w.index,
                        sa_label: w.sa_label,
                        latent: w.latent,
                        intended: w.intended.to_vec(),
                    });
                }
            }
        }
        GroundTruth {
            seed: cfg.seed,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            effects: cfg.effects.clone(),
            informative_features: cfg
                .effects
                .iter()
                .filter(|e| e.strength > 0.0)
                .map(|e| e.feature.clone())
                .collect(),
            windows,
        }
    }

    /// Intended values as a dataset, for comparison with extracted rows.
    pub fn intended_dataset(&self) -> Dataset {
        let rows = self
            .windows
            .iter()
            .map(|w| {
                let mut values = [None; N_FEATURES];
                values.copy_from_slice(&w.intended);
                crate::featureset::FeatureRow {
                    participant_id: w.participant_id.clone(),
                    drive_id: w.drive_id.clone(),
                    window_index: w.window_index,
                    values,
                    sa_label: w.sa_label,
                }
            })
            .collect();
        Dataset::new(rows).expect("labels in range")
    }
}

/// Renders every session of a study into memory.
pub fn generate(cfg: &SynthConfig) -> Result<(Vec<Session>, GroundTruth)> {
    let plan = plan_study(cfg)?;
    let sessions = plan
        .drives()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(p, d)| render_session(p, d))
        .collect();
    Ok((sessions, GroundTruth::from_plan(cfg, &plan)))
}

/// Renders the study into `<dir>/<participant>_<drive>/`, one session per
/// worker so memory stays bounded.
pub fn write_sessions(cfg: &SynthConfig, dir: &Path) -> Result<GroundTruth> {
    let plan = plan_study(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    plan.drives().collect::<Vec<_>>().par_iter().try_for_each(|(p, d)| {
        let s = render_session(p, d);
        write_session(&dir.join(s.dir_name()), &s)
    })?;
    Ok(GroundTruth::from_plan(cfg, &plan))
}

/// Writes the study under `out`: `sessions/<participant>_<drive>/` per drive
/// and `ground_truth.json`.
pub fn write_study(cfg: &SynthConfig, out: &Path) -> Result<GroundTruth> {
    let truth = write_sessions(cfg, &out.join("sessions"))?;
    truth.save(&out.join(GROUND_TRUTH_FILE))?;
    Ok(truth)
}

/// Generates a study and runs feature extraction on it without touching the
/// filesystem.
pub fn synth_dataset(cfg: &SynthConfig, features: &FeatureParams) -> Result<(Dataset, GroundTruth)> {
    features.validate()?;
    let plan = plan_study(cfg)?;
    let parts = plan
        .drives()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(p, d)| session_rows(&render_session(p, d), features))
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset::new(parts.into_iter().flatten().collect())?;
    Ok((dataset, GroundTruth::from_plan(cfg, &plan)))
}
