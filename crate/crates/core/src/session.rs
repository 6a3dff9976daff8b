//! On-disk session layout: one directory per drive holding the raw device
//! streams and a JSON manifest.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/gsr.csv         t_ms,microsiemens
//! <dir>/ibi.csv         t_ms,ibi_ms
//! <dir>/gaze.csv        t_ms,x_deg,y_deg
//! <dir>/sa_prompts.csv  t_ms,sa_label
//! ```
//!
//! Timestamps are device-clock milliseconds; the manifest records each
//! device's delay relative to the session clock.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::GazePoint;
use crate::timebase::{Sample, TimedSeries};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GSR_FILE: &str = "gsr.csv";
pub const IBI_FILE: &str = "ibi.csv";
pub const GAZE_FILE: &str = "gaze.csv";
pub const PROMPTS_FILE: &str = "sa_prompts.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demographics {
    pub age: u32,
    pub gender: String,
    pub av_knowledge: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceInfo {
    pub delay_ms: f64,
    pub nominal_rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Devices {
    pub gsr: DeviceInfo,
    pub ibi: DeviceInfo,
    pub gaze: DeviceInfo,
    pub sa: DeviceInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub participant_id: String,
    pub drive_id: String,
    pub drive_start_ms: f64,
    pub drive_end_ms: f64,
    pub demographics: Demographics,
    pub devices: Devices,
    #[serde(default)]
    pub tor_events_ms: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaPrompt {
    pub t_ms: f64,
    pub sa_label: u8,
}

/// One drive of one participant, as recorded (device clocks).
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub manifest: SessionManifest,
    pub gsr: TimedSeries<f64>,
    pub ibi: TimedSeries<f64>,
    pub gaze: TimedSeries<GazePoint>,
    pub prompts: Vec<SaPrompt>,
}

impl Session {
    /// Conventional directory name, `<participant>_<drive>`.
    pub fn dir_name(&self) -> String {
        format!("{}_{}", self.manifest.participant_id, self.manifest.drive_id)
    }

    /// Prompts moved onto the session clock.
    pub fn aligned_prompts(&self) -> Vec<SaPrompt> {
        let d = self.manifest.devices.sa.delay_ms;
        self.prompts
            .iter()
            .map(|p| SaPrompt {
                t_ms: p.t_ms - d,
                sa_label: p.sa_label,
            })
            .collect()
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses a numeric CSV with the exact `header` and returns its rows.
fn read_numeric_csv<const N: usize>(path: &Path, header: [&str; N]) -> Result<Vec<[f64; N]>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let found = reader.byte_headers().map_err(|e| csv_error(path, e))?.clone();
    if found.len() != N || found.iter().zip(header).any(|(a, b)| a != b.as_bytes()) {
        return Err(Error::malformed(
            path,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                String::from_utf8_lossy(found.as_slice())
            ),
        ));
    }
    let mut out = Vec::new();
    let mut record = csv::ByteRecord::new();
    while reader.read_byte_record(&mut record).map_err(|e| csv_error(path, e))? {
        let mut row = [0.0; N];
        for (k, field) in record.iter().enumerate() {
            row[k] = std::str::from_utf8(field)
                .ok()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::malformed(
                        path,
                        format!(
                            "line {}: `{}` is not a number",
                            out.len() + 2,
                            String::from_utf8_lossy(field)
                        ),
                    )
                })?;
        }
        out.push(row);
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::malformed(path, format!("{other:?}")),
    }
}

fn write_csv<T>(path: &Path, header: &str, rows: &[T], mut line: impl FnMut(&mut String, &T)) -> Result<()> {
    let mut text = String::with_capacity(32 * rows.len() + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for r in rows {
        line(&mut text, r);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path) -> Result<SessionManifest> {
    let m: SessionManifest = serde_json::from_str(&read_text(path)?).map_err(|e| Error::malformed(path, e))?;
    if !(m.drive_start_ms.is_finite() && m.drive_end_ms.is_finite() && m.drive_end_ms > m.drive_start_ms) {
        return Err(Error::malformed(path, "drive_end_ms must exceed drive_start_ms"));
    }
    Ok(m)
}

fn scalar_series(path: &Path, device: &str, info: DeviceInfo, header: [&str; 2]) -> Result<TimedSeries<f64>> {
    let rows = read_numeric_csv(path, header)?;
    let samples = rows.into_iter().map(|[t, v]| Sample::new(t, v)).collect();
    TimedSeries::new(device, info.nominal_rate_hz, info.delay_ms, samples)
}

/// Reads a session directory.
pub fn load_session(dir: &Path) -> Result<Session> {
    let manifest = load_manifest(&dir.join(MANIFEST_FILE))?;
    let dev = manifest.devices;
    let gsr = scalar_series(&dir.join(GSR_FILE), "gsr", dev.gsr, ["t_ms", "microsiemens"])?;
    let ibi = scalar_series(&dir.join(IBI_FILE), "ibi", dev.ibi, ["t_ms", "ibi_ms"])?;
    let gaze_rows = read_numeric_csv(&dir.join(GAZE_FILE), ["t_ms", "x_deg", "y_deg"])?;
    let gaze = TimedSeries::new(
        "gaze",
        dev.gaze.nominal_rate_hz,
        dev.gaze.delay_ms,
        gaze_rows
            .into_iter()
            .map(|[t, x, y]| Sample::new(t, GazePoint::new(x, y)))
            .collect(),
    )?;
    let prompts_path = dir.join(PROMPTS_FILE);
    let prompts = read_numeric_csv(&prompts_path, ["t_ms", "sa_label"])?
        .into_iter()
        .map(|[t, l]| {
            if !(l.fract() == 0.0 && (0.0..=3.0).contains(&l)) {
                return Err(Error::malformed(&prompts_path, format!("SA label {l} outside 0..=3")));
            }
            Ok(SaPrompt {
                t_ms: t,
                sa_label: l as u8,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Session {
        manifest,
        gsr,
        ibi,
        gaze,
        prompts,
    })
}

/// Writes a session into `dir` (created if needed).
pub fn write_session(dir: &Path, s: &Session) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = serde_json::to_string_pretty(&s.manifest)? + "\n";
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
    let pair = |out: &mut String, x: &Sample<f64>| {
        let _ = write!(out, "{},{}", x.t_ms, x.value);
    };
    write_csv(&dir.join(GSR_FILE), "t_ms,microsiemens", s.gsr.samples(), pair)?;
    write_csv(&dir.join(IBI_FILE), "t_ms,ibi_ms", s.ibi.samples(), pair)?;
    write_csv(&dir.join(GAZE_FILE), "t_ms,x_deg,y_deg", s.gaze.samples(), |out, x| {
        let _ = write!(out, "{},{},{}", x.t_ms, x.value.x_deg, x.value.y_deg);
    })?;
    write_csv(&dir.join(PROMPTS_FILE), "t_ms,sa_label", &s.prompts, |out, p| {
        let _ = write!(out, "{},{}", p.t_ms, p.sa_label);
    })
}

/// Session directories under `root` (those holding a manifest), sorted by
/// name.
pub fn discover_sessions(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.join(MANIFEST_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}
