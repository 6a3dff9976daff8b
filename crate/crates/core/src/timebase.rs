//! Timestamped device streams, constant-delay synchronization and the
//! fixed-length windowing shared by every feature extractor.
//!
//! All timestamps are milliseconds (as `f64`) on a single session clock once
//! [`TimedSeries::apply_delay`] has been called. Windows are half-open
//! `[start_ms, end_ms)` intervals aligned to the drive start.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window length used throughout the pipeline.
pub const WINDOW_MS: f64 = 30_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample<V> {
    pub t_ms: f64,
    pub value: V,
}

impl<V> Sample<V> {
    pub fn new(t_ms: f64, value: V) -> Self {
        Sample { t_ms, value }
    }
}

/// An ordered stream of samples from one device.
///
/// Construction validates that timestamps are finite and strictly increasing,
/// that the stream is non-empty and that the recorded delay is finite. The
/// container is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSeries<V> {
    device_id: String,
    nominal_rate_hz: f64,
    delay_ms: f64,
    samples: Vec<Sample<V>>,
}

impl<V> TimedSeries<V> {
    pub fn new(
        device_id: impl Into<String>,
        nominal_rate_hz: f64,
        delay_ms: f64,
        samples: Vec<Sample<V>>,
    ) -> Result<Self> {
        let device_id = device_id.into();
        let invalid = |reason: String| Error::InvalidSeries {
            device: device_id.clone(),
            reason,
        };
        if !(nominal_rate_hz.is_finite() && nominal_rate_hz > 0.0) {
            return Err(invalid(format!("nominal rate {nominal_rate_hz} must be positive")));
        }
        if !delay_ms.is_finite() {
            return Err(invalid(format!("delay {delay_ms} is not finite")));
        }
        if samples.is_empty() {
            return Err(invalid("no samples".into()));
        }
        if let Some(s) = samples.iter().find(|s| !s.t_ms.is_finite()) {
            return Err(invalid(format!("non-finite timestamp {}", s.t_ms)));
        }
        if let Some(i) = samples.windows(2).position(|p| p[1].t_ms <= p[0].t_ms) {
            return Err(invalid(format!(
                "timestamps not strictly increasing at sample {} ({} after {})",
                i + 1,
                samples[i + 1].t_ms,
                samples[i].t_ms
            )));
        }
        Ok(TimedSeries {
            device_id,
            nominal_rate_hz,
            delay_ms,
            samples,
        })
    }

    pub fn device_id(&self) -> &str {
        &self.device_id
    }

    pub fn nominal_rate_hz(&self) -> f64 {
        self.nominal_rate_hz
    }

    pub fn delay_ms(&self) -> f64 {
        self.delay_ms
    }

    pub fn samples(&self) -> &[Sample<V>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first_t_ms(&self) -> f64 {
        self.samples[0].t_ms
    }

    pub fn last_t_ms(&self) -> f64 {
        self.samples[self.samples.len() - 1].t_ms
    }

    /// Time covered from the first to the last sample.
    pub fn span_ms(&self) -> f64 {
        self.last_t_ms() - self.first_t_ms()
    }

    /// Samples with `start_ms <= t_ms < end_ms`.
    pub fn slice(&self, start_ms: f64, end_ms: f64) -> &[Sample<V>] {
        let lo = self.samples.partition_point(|s| s.t_ms < start_ms);
        let hi = self.samples.partition_point(|s| s.t_ms < end_ms);
        &self.samples[lo..hi.max(lo)]
    }

    pub fn into_samples(self) -> Vec<Sample<V>> {
        self.samples
    }

    /// Same device metadata and timestamps with transformed values.
    pub fn map_values<U>(&self, mut f: impl FnMut(&V) -> U) -> TimedSeries<U> {
        TimedSeries {
            device_id: self.device_id.clone(),
            nominal_rate_hz: self.nominal_rate_hz,
            delay_ms: self.delay_ms,
            samples: self.samples.iter().map(|s| Sample::new(s.t_ms, f(&s.value))).collect(),
        }
    }

    /// Replaces the recorded delay without touching timestamps.
    pub fn with_delay(mut self, delay_ms: f64) -> Result<Self> {
        if !delay_ms.is_finite() {
            return Err(Error::InvalidSeries {
                device: self.device_id,
                reason: format!("delay {delay_ms} is not finite"),
            });
        }
        self.delay_ms = delay_ms;
        Ok(self)
    }
}

impl<V: Clone> TimedSeries<V> {
    /// Moves the stream onto the session clock: every timestamp is shifted by
    /// `-delay_ms` and the recorded delay becomes zero.
    pub fn apply_delay(&self) -> TimedSeries<V> {
        let delay = self.delay_ms;
        TimedSeries {
            device_id: self.device_id.clone(),
            nominal_rate_hz: self.nominal_rate_hz,
            delay_ms: 0.0,
            samples: self
                .samples
                .iter()
                .map(|s| Sample::new(s.t_ms - delay, s.value.clone()))
                .collect(),
        }
    }
}

/// Free-function form of [`TimedSeries::apply_delay`].
pub fn apply_delay<V: Clone>(series: &TimedSeries<V>) -> TimedSeries<V> {
    series.apply_delay()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub index: usize,
    pub start_ms: f64,
    pub end_ms: f64,
}

impl Window {
    pub fn contains(&self, t_ms: f64) -> bool {
        self.start_ms <= t_ms && t_ms < self.end_ms
    }

    pub fn midpoint_ms(&self) -> f64 {
        0.5 * (self.start_ms + self.end_ms)
    }
}

/// Window length and stride; stride equal to length gives contiguous,
/// non-overlapping windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSpec {
    pub length_ms: f64,
    pub stride_ms: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            length_ms: WINDOW_MS,
            stride_ms: WINDOW_MS,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_ms.is_finite() && self.length_ms > 0.0) {
            return Err(Error::Config(format!(
                "window length {} must be positive",
                self.length_ms
            )));
        }
        if !(self.stride_ms.is_finite() && self.stride_ms > 0.0) {
            return Err(Error::Config(format!(
                "window stride {} must be positive",
                self.stride_ms
            )));
        }
        Ok(())
    }
}

/// Contiguous 30 s windows over `[drive_start_ms, drive_end_ms)`. A trailing
/// interval shorter than a full window is discarded.
pub fn make_windows(drive_start_ms: f64, drive_end_ms: f64) -> Vec<Window> {
    make_windows_with(drive_start_ms, drive_end_ms, WindowSpec::default())
}

pub fn make_windows_with(drive_start_ms: f64, drive_end_ms: f64, spec: WindowSpec) -> Vec<Window> {
    let span = drive_end_ms - drive_start_ms;
    if !(span.is_finite() && span >= spec.length_ms) {
        return Vec::new();
    }
    let count = ((span - spec.length_ms) / spec.stride_ms).floor() as usize + 1;
    (0..count)
        .map(|index| {
            let offset = index as f64 * spec.stride_ms;
            Window {
                index,
                start_ms: drive_start_ms + offset,
                end_ms: drive_start_ms + (offset + spec.length_ms),
            }
        })
        .collect()
}

/// Arithmetic mean of the values falling inside `w`, `None` when the window
/// holds no samples.
pub fn window_mean(series: &TimedSeries<f64>, w: &Window) -> Option<f64> {
    mean_of(series.slice(w.start_ms, w.end_ms).iter().map(|s| s.value))
}

pub(crate) fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
