//! Skin-conductance decomposition and cardiac features.
//!
//! The tonic (slow) level of a GSR trace is estimated with a centered rolling
//! median followed by a centered rolling mean; the phasic part is the
//! residual, so `tonic + phasic` reproduces the raw trace by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timebase::{Sample, TimedSeries};

/// Shortest GSR trace that can support a baseline estimate.
pub const MIN_GSR_SPAN_MS: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GsrParams {
    pub median_kernel_ms: f64,
    pub mean_kernel_ms: f64,
}

impl Default for GsrParams {
    fn default() -> Self {
        GsrParams {
            median_kernel_ms: 4_000.0,
            mean_kernel_ms: 2_000.0,
        }
    }
}

impl GsrParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("median_kernel_ms", self.median_kernel_ms),
            ("mean_kernel_ms", self.mean_kernel_ms),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("gsr.{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    fn half_width(kernel_ms: f64, rate_hz: f64) -> usize {
        ((kernel_ms * rate_hz / 1000.0).round() as usize) / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsrDecomposition {
    pub tonic: TimedSeries<f64>,
    pub phasic: TimedSeries<f64>,
}

/// Splits a raw skin-conductance trace (µS) into tonic and phasic parts.
///
/// Kernel widths are converted to sample counts with the series' nominal
/// rate. Windows are truncated at the edges of the trace.
pub fn decompose_gsr(raw: &TimedSeries<f64>, params: &GsrParams) -> Result<GsrDecomposition> {
    params.validate()?;
    if raw.span_ms() < MIN_GSR_SPAN_MS {
        return Err(Error::InsufficientData(format!(
            "GSR trace spans {:.1} ms, need at least {MIN_GSR_SPAN_MS} ms",
            raw.span_ms()
        )));
    }
    let values: Vec<f64> = raw.samples().iter().map(|s| s.value).collect();
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidSeries {
            device: raw.device_id().to_string(),
            reason: format!("non-finite conductance value {v}"),
        });
    }
    let rate = raw.nominal_rate_hz();
    let median = rolling_median(&values, GsrParams::half_width(params.median_kernel_ms, rate));
    let tonic = rolling_mean(&median, GsrParams::half_width(params.mean_kernel_ms, rate));

    let mut tonic_samples = Vec::with_capacity(values.len());
    let mut phasic_samples = Vec::with_capacity(values.len());
    for (s, &t) in raw.samples().iter().zip(&tonic) {
        tonic_samples.push(Sample::new(s.t_ms, t));
        phasic_samples.push(Sample::new(s.t_ms, s.value - t));
    }
    let rebuild = |samples| TimedSeries::new(raw.device_id(), rate, raw.delay_ms(), samples);
    Ok(GsrDecomposition {
        tonic: rebuild(tonic_samples)?,
        phasic: rebuild(phasic_samples)?,
    })
}

/// Centered rolling median over `[i - half, i + half]`, truncated at the ends.
/// Keeps the current window as a sorted vector; when a value enters and one
/// leaves, only the elements ranked between them are shifted.
pub(crate) fn rolling_median(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut window: Vec<f64> = Vec::with_capacity(2 * half + 2);
    for &v in &values[..(half + 1).min(n)] {
        let pos = window.partition_point(|&x| x < v);
        window.insert(pos, v);
    }
    for i in 0..n {
        if i > 0 {
            let incoming = values.get(i + half).copied();
            let outgoing = (i > half).then(|| values[i - half - 1]);
            match (incoming, outgoing) {
                (Some(v), Some(o)) => {
                    let p_out = window.partition_point(|&x| x < o);
                    let p_in = window.partition_point(|&x| x < v);
                    if p_in > p_out {
                        window.copy_within(p_out + 1..p_in, p_out);
                        window[p_in - 1] = v;
                    } else {
                        window.copy_within(p_in..p_out, p_in + 1);
                        window[p_in] = v;
                    }
                }
                (Some(v), None) => {
                    let pos = window.partition_point(|&x| x < v);
                    window.insert(pos, v);
                }
                (None, Some(o)) => {
                    let pos = window.partition_point(|&x| x < o);
                    window.remove(pos);
                }
                (None, None) => {}
            }
        }
        let m = window.len();
        out.push(if m % 2 == 1 {
            window[m / 2]
        } else {
            0.5 * (window[m / 2 - 1] + window[m / 2])
        });
    }
    out
}

/// Centered rolling mean over `[i - half, i + half]`, truncated at the ends.
pub(crate) fn rolling_mean(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in values {
        acc += v;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmssdMode {
    /// Root of the mean squared successive difference.
    #[default]
    Standard,
    /// Root of the summed squared successive differences, without dividing by
    /// the number of differences.
    RootSumSquares,
}

/// Inter-beat intervals (ms) observed within one window.
#[derive(Debug, Clone, PartialEq)]
pub struct IbiWindow {
    intervals: Vec<f64>,
}

impl IbiWindow {
    pub fn new(intervals: Vec<f64>) -> Result<Self> {
        if let Some(v) = intervals.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParam(format!("inter-beat interval {v} must be positive")));
        }
        Ok(IbiWindow { intervals })
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    pub fn heart_rate(&self) -> Option<f64> {
        hr_from_ibi(&self.intervals)
    }

    pub fn rmssd(&self, mode: RmssdMode) -> Option<f64> {
        rmssd(&self.intervals, mode)
    }
}

/// Mean heart rate in beats per minute, `None` without beats.
pub fn hr_from_ibi(intervals: &[f64]) -> Option<f64> {
    if intervals.is_empty() {
        return None;
    }
    let mean = intervals.iter().sum::<f64>() / intervals.len() as f64;
    Some(60_000.0 / mean)
}

/// RMSSD over successive pairs `i = 1..N-1`; `None` for fewer than two beats.
pub fn rmssd(intervals: &[f64], mode: RmssdMode) -> Option<f64> {
    if intervals.len() < 2 {
        return None;
    }
    let sum_sq: f64 = intervals
        .windows(2)
        .map(|p| {
            let d = p[0] - p[1];
            d * d
        })
        .sum();
    Some(match mode {
        RmssdMode::Standard => (sum_sq / (intervals.len() - 1) as f64).sqrt(),
        RmssdMode::RootSumSquares => sum_sq.sqrt(),
    })
}
