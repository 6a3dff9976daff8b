use super::plan::{DrivePlan, ParticipantPlan, BEAT_LEAD_MS, GAZE_DT_MS, GSR_DT_MS};
use crate::gaze::GazePoint;
use crate::session::{SaPrompt, Session, SessionManifest};
use crate::timebase::{Sample, TimedSeries, WINDOW_MS};

/// Inverse quantization steps: 1e-5 µS and 1e-4 degrees.
const GSR_SCALE: f64 = 1e5;
const GAZE_SCALE: f64 = 1e4;
/// Saccade-like sweep between fixations: a triangle wave in x above every
/// AOI, 40°/s.
const SWEEP_PERIOD_MS: f64 = 5_000.0;
const SWEEP_HALF_WIDTH_DEG: f64 = 50.0;
const SWEEP_Y_DEG: f64 = 25.0;

fn quantize(v: f64, scale: f64) -> f64 {
    (v * scale).round() / scale
}

fn sweep(t: f64) -> GazePoint {
    let phase = (t / SWEEP_PERIOD_MS).rem_euclid(1.0);
    let tri = 2.0 * (phase - 0.5).abs();
    GazePoint::new(SWEEP_HALF_WIDTH_DEG * (2.0 * tri - 1.0), SWEEP_Y_DEG)
}

fn render_gsr(d: &DrivePlan) -> Vec<Sample<f64>> {
    let per_window = (WINDOW_MS / GSR_DT_MS).round() as usize;
    let delay = d.devices.gsr.delay_ms;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = d.drive_start_ms + k as f64 * GSR_DT_MS;
        if t >= d.drive_end_ms {
            break;
        }
        let phasic = d.windows.get(k / per_window).map_or(0.0, |w| w.gsr_bump(t));
        out.push(Sample::new(t + delay, quantize(d.tonic(t) + phasic, GSR_SCALE)));
        k += 1;
    }
    out
}

fn render_ibi(d: &DrivePlan) -> Vec<Sample<f64>> {
    let delay = d.devices.ibi.delay_ms;
    let mut out = Vec::new();
    let first_gap = d.windows[0].beats[0] - d.anchor_beat_ms;
    out.push(Sample::new(d.anchor_beat_ms + delay, first_gap));
    let mut prev = d.anchor_beat_ms;
    for w in &d.windows {
        for &b in &w.beats {
            out.push(Sample::new(b + delay, b - prev));
            prev = b;
        }
    }
    // keep the last window's rhythm until the recording stops
    let last = &d.windows[d.windows.len() - 1].beats;
    let n = last.len();
    let pattern = if n >= 3 {
        [last[n - 2] - last[n - 3], last[n - 1] - last[n - 2]]
    } else {
        let gap = last[n - 1] - if n >= 2 { last[n - 2] } else { d.anchor_beat_ms };
        [gap, gap]
    };
    let mut i = 0;
    while prev + pattern[i % 2] < d.drive_end_ms + BEAT_LEAD_MS {
        prev += pattern[i % 2];
        out.push(Sample::new(prev + delay, pattern[i % 2]));
        i += 1;
    }
    out
}

fn render_gaze(d: &DrivePlan) -> Vec<Sample<GazePoint>> {
    let delay = d.devices.gaze.delay_ms;
    let mut fixations = d.windows.iter().flat_map(|w| &w.fixations).peekable();
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = d.drive_start_ms + k as f64 * GAZE_DT_MS;
        if t >= d.drive_end_ms {
            break;
        }
        while fixations.peek().is_some_and(|f| f.start_ms + f.duration_ms < t) {
            fixations.next();
        }
        let p = match fixations.peek() {
            Some(f) if f.start_ms <= t => f.point(((t - f.start_ms) / GAZE_DT_MS).round() as usize),
            _ => sweep(t),
        };
        out.push(Sample::new(
            t + delay,
            GazePoint::new(quantize(p.x_deg, GAZE_SCALE), quantize(p.y_deg, GAZE_SCALE)),
        ));
        k += 1;
    }
    out
}

/// Raw recordings of one planned drive, on the device clocks.
pub fn render_session(p: &ParticipantPlan, d: &DrivePlan) -> Session {
    let dev = &d.devices;
    let prompts = d
        .windows
        .iter()
        .map(|w| SaPrompt {
            t_ms: w.prompt_ms + dev.sa.delay_ms,
            sa_label: w.sa_label,
        })
        .collect();
    let series = |name: &str, rate: f64, delay: f64, samples| {
        TimedSeries::new(name, rate, delay, samples).expect("rendered streams are ordered and finite")
    };
    Session {
        manifest: SessionManifest {
            participant_id: p.participant_id.clone(),
            drive_id: d.drive_id.clone(),
            drive_start_ms: d.drive_start_ms,
            drive_end_ms: d.drive_end_ms,
            demographics: p.demographics.clone(),
            devices: *dev,
            tor_events_ms: d.tor_events_ms.clone(),
        },
        gsr: series("gsr", dev.gsr.nominal_rate_hz, dev.gsr.delay_ms, render_gsr(d)),
        ibi: series("ibi", dev.ibi.nominal_rate_hz, dev.ibi.delay_ms, render_ibi(d)),
        gaze: TimedSeries::new("gaze", dev.gaze.nominal_rate_hz, dev.gaze.delay_ms, render_gaze(d))
            .expect("rendered streams are ordered and finite"),
        prompts,
    }
}
