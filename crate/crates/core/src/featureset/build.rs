use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    category_id, Dataset, FeatureRow, AGE, AV_KNOWLEDGE, DISPERSION_BASE, DURATION_BASE, FIXATION_COUNT_BASE, GENDER,
    MEAN_GSR, MEAN_HR, MEAN_HRV, N_FEATURES,
};
use crate::error::Result;
use crate::gaze::{detect_fixations_idt, gaze_window_metrics, label_fixations, Aoi, AoiConfig, IdtParams};
use crate::physio::{decompose_gsr, hr_from_ibi, rmssd, GsrParams, RmssdMode};
use crate::session::{load_session, SaPrompt, Session};
use crate::timebase::{make_windows_with, window_mean, Window, WindowSpec};

/// Extraction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureParams {
    pub window: WindowSpec,
    pub gsr: GsrParams,
    pub rmssd: RmssdMode,
    pub idt: IdtParams,
    pub aoi: AoiConfig,
    /// Drop windows containing a takeover-request event.
    pub exclude_tor_windows: bool,
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.gsr.validate()?;
        self.idt.validate()?;
        self.aoi.validate()
    }
}

/// Label for each window: a prompt labels the window whose end is the
/// latest one at or before the prompt time, provided the prompt arrives
/// less than one window length after that end. When several prompts land on
/// the same window the earliest prompt wins.
pub fn attach_labels(windows: &[Window], prompts: &[SaPrompt]) -> Vec<Option<u8>> {
    let mut labels = vec![None; windows.len()];
    let mut order: Vec<&SaPrompt> = prompts.iter().collect();
    order.sort_by(|a, b| a.t_ms.total_cmp(&b.t_ms));
    for p in order {
        let k = windows.partition_point(|w| w.end_ms <= p.t_ms);
        if k == 0 {
            log::debug!("prompt at {} ms precedes every window end", p.t_ms);
            continue;
        }
        let w = &windows[k - 1];
        if p.t_ms - w.end_ms >= w.end_ms - w.start_ms {
            log::debug!("prompt at {} ms is too late for window {}", p.t_ms, w.index);
            continue;
        }
        if labels[k - 1].is_none() {
            labels[k - 1] = Some(p.sa_label);
        }
    }
    labels
}

/// Feature rows of one session; windows without a label are dropped.
pub fn session_rows(session: &Session, p: &FeatureParams) -> Result<Vec<FeatureRow>> {
    let m = &session.manifest;
    let windows = make_windows_with(m.drive_start_ms, m.drive_end_ms, p.window);
    let labels = attach_labels(&windows, &session.aligned_prompts());

    let gsr = session.gsr.apply_delay();
    let phasic = decompose_gsr(&gsr, &p.gsr)?.phasic;
    let ibi = session.ibi.apply_delay();
    let gaze = session.gaze.apply_delay();
    let mut fixations = detect_fixations_idt(&gaze, &p.idt);
    label_fixations(&mut fixations, &p.aoi);

    let demo = [
        (AGE, m.demographics.age as f64),
        (GENDER, category_id(GENDER, &m.demographics.gender)?),
        (AV_KNOWLEDGE, category_id(AV_KNOWLEDGE, &m.demographics.av_knowledge)?),
    ];

    let mut rows = Vec::new();
    let mut dropped = 0usize;
    for (w, label) in windows.iter().zip(labels) {
        let Some(sa_label) = label else {
            dropped += 1;
            continue;
        };
        if p.exclude_tor_windows && m.tor_events_ms.iter().any(|&t| w.contains(t)) {
            continue;
        }
        let mut values = [None; N_FEATURES];
        for (i, v) in demo {
            values[i] = Some(v);
        }
        values[MEAN_GSR] = window_mean(&phasic, w);
        let beats: Vec<f64> = ibi.slice(w.start_ms, w.end_ms).iter().map(|s| s.value).collect();
        values[MEAN_HR] = hr_from_ibi(&beats);
        values[MEAN_HRV] = rmssd(&beats, p.rmssd);
        let metrics = gaze_window_metrics(&fixations, w, &p.aoi);
        for aoi in Aoi::ALL {
            let a = metrics.get(aoi);
            values[FIXATION_COUNT_BASE + aoi.index()] = Some(a.number_of_fixations as f64);
            values[DISPERSION_BASE + aoi.index()] = a.mean_dispersion_deg;
            values[DURATION_BASE + aoi.index()] = a.mean_duration_ms;
        }
        rows.push(FeatureRow {
            participant_id: m.participant_id.clone(),
            drive_id: m.drive_id.clone(),
            window_index: w.index,
            values,
            sa_label,
        });
    }
    if dropped > 0 {
        log::info!(
            "{}_{}: dropped {dropped} of {} windows without an SA prompt",
            m.participant_id,
            m.drive_id,
            windows.len()
        );
    }
    Ok(rows)
}

/// Rows from every session, merged in `(participant, drive, window)` order.
pub fn build_dataset(sessions: &[Session], p: &FeatureParams) -> Result<Dataset> {
    p.validate()?;
    let parts = sessions
        .par_iter()
        .map(|s| session_rows(s, p))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(parts.into_iter().flatten().collect())
}

/// Loads and extracts session directories one at a time per worker, so only
/// a few raw sessions are held in memory.
pub fn build_dataset_from_dirs(dirs: &[PathBuf], p: &FeatureParams) -> Result<Dataset> {
    p.validate()?;
    let parts = dirs
        .par_iter()
        .map(|d| load_session(d).and_then(|s| session_rows(&s, p)))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(parts.into_iter().flatten().collect())
}
