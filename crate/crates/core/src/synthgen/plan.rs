use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::SynthConfig;
use crate::error::Result;
use crate::featureset::{
    feature_index, AGE, AV_KNOWLEDGE, AV_KNOWLEDGE_LEVELS, DISPERSION_BASE, DURATION_BASE, FIXATION_COUNT_BASE, GENDER,
    GENDERS, MEAN_GSR, MEAN_HR, MEAN_HRV, N_FEATURES,
};
use crate::gaze::{Aoi, AoiConfig, GazePoint, Rect};
use crate::physio::{hr_from_ibi, rmssd, RmssdMode};
use crate::seeds::derive_seed;
use crate::session::{Demographics, DeviceInfo, Devices};
use crate::timebase::WINDOW_MS;

pub(super) const GSR_RATE_HZ: f64 = 128.0;
pub(super) const GSR_DT_MS: f64 = 1000.0 / GSR_RATE_HZ;
pub(super) const GAZE_DT_MS: f64 = 5.0;
pub(super) const GSR_BUMP_MS: f64 = 1000.0;
const GSR_BUMPS: usize = 3;
/// Gap between the last beat of a window and the window end.
pub(super) const BEAT_LEAD_MS: f64 = 100.0;
/// Fixations stay this far from window edges.
const EDGE_MS: f64 = 250.0;
/// Shortest gap between fixations (three filler samples).
const MIN_GAP_MS: f64 = 20.0;
const MIN_FIXATION_MS: f64 = 210.0;
const MAX_FIXATION_MS: f64 = 800.0;
const MAX_RADIUS_DEG: f64 = 0.24;
const MIN_RADIUS_DEG: f64 = 0.03;
const LABEL_CENTER: f64 = 1.6;
const LABEL_SCALE: f64 = 0.9;
/// Gaze off every AOI lands here.
const NONE_REGION: Rect = Rect::new(-40.0, -20.0, -30.0, -15.0);

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedFixation {
    pub start_ms: f64,
    pub duration_ms: f64,
    pub centroid: GazePoint,
    pub radius_deg: f64,
    pub phase: f64,
    pub aoi: Option<Aoi>,
}

impl PlannedFixation {
    pub fn n_samples(&self) -> usize {
        (self.duration_ms / GAZE_DT_MS).round() as usize + 1
    }

    /// Position of the `i`-th sample: equally spaced on a circle around the
    /// centroid, so the centroid and the mean distance are exact.
    pub fn point(&self, i: usize) -> GazePoint {
        let a = self.phase + 2.0 * PI * i as f64 / self.n_samples() as f64;
        GazePoint::new(
            self.centroid.x_deg + self.radius_deg * a.cos(),
            self.centroid.y_deg + self.radius_deg * a.sin(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlan {
    pub index: usize,
    pub start_ms: f64,
    pub end_ms: f64,
    pub gsr_amplitude: f64,
    pub gsr_centers: [f64; GSR_BUMPS],
    /// Beat times inside the window; the last one is `end_ms - 100`.
    pub beats: Vec<f64>,
    pub fixations: Vec<PlannedFixation>,
    /// Prompt time on the session clock.
    pub prompt_ms: f64,
    pub intended: [Option<f64>; N_FEATURES],
    pub latent: f64,
    pub sa_label: u8,
}

impl WindowPlan {
    pub fn gsr_bump(&self, t: f64) -> f64 {
        self.gsr_centers
            .iter()
            .map(|&c| {
                let u = t - c + GSR_BUMP_MS / 2.0;
                if (0.0..GSR_BUMP_MS).contains(&u) {
                    self.gsr_amplitude * 0.5 * (1.0 - (2.0 * PI * u / GSR_BUMP_MS).cos())
                } else {
                    0.0
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivePlan {
    pub drive_id: String,
    pub drive_start_ms: f64,
    pub drive_end_ms: f64,
    pub devices: Devices,
    pub tonic_base: f64,
    pub tonic_swing: f64,
    pub tor_events_ms: Vec<f64>,
    /// Beat preceding the first window's beats.
    pub anchor_beat_ms: f64,
    pub windows: Vec<WindowPlan>,
}

impl DrivePlan {
    pub fn tonic(&self, t: f64) -> f64 {
        let phase = PI * (t - self.drive_start_ms) / (self.drive_end_ms - self.drive_start_ms);
        self.tonic_base + self.tonic_swing * phase.sin().powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantPlan {
    pub participant_id: String,
    pub demographics: Demographics,
    pub drives: Vec<DrivePlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub participants: Vec<ParticipantPlan>,
}

impl StudyPlan {
    pub fn drives(&self) -> impl Iterator<Item = (&ParticipantPlan, &DrivePlan)> {
        self.participants
            .iter()
            .flat_map(|p| p.drives.iter().map(move |d| (p, d)))
    }

    pub fn n_windows(&self) -> usize {
        self.drives().map(|(_, d)| d.windows.len()).sum()
    }
}

/// Location and scale used to standardize a feature inside the latent score;
/// these are the nominal population moments of the generator.
pub(super) fn nominal(feature: usize) -> (f64, f64) {
    match feature {
        AGE => (44.5, 14.7),
        AV_KNOWLEDGE => (1.5, 1.118),
        GENDER => (0.5, 0.5),
        MEAN_GSR => (0.021, 0.0079),
        MEAN_HR => (72.0, 7.8),
        MEAN_HRV => (40.0, 12.8),
        j if (FIXATION_COUNT_BASE..DISPERSION_BASE).contains(&j) => {
            if is_busy(aoi_of(j - FIXATION_COUNT_BASE)) {
                (12.0, 5.0)
            } else {
                (2.0, 1.4)
            }
        }
        j if (DISPERSION_BASE..DURATION_BASE).contains(&j) => (0.11, 0.035),
        j => {
            let (mu, _) = duration_prior(aoi_of(j - DURATION_BASE));
            (mu, 45.0)
        }
    }
}

fn aoi_of(k: usize) -> Aoi {
    Aoi::ALL[k]
}

/// The two regions drivers look at most.
fn is_busy(aoi: Aoi) -> bool {
    matches!(aoi, Aoi::Center | Aoi::Game)
}

fn duration_prior(aoi: Aoi) -> (f64, f64) {
    match aoi {
        Aoi::Game => (330.0, 40.0),
        Aoi::Center => (290.0, 35.0),
        _ => (260.0, 30.0),
    }
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("finite normal").sample(rng)
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// Participant-level tendencies shared by both drives.
struct Traits {
    hr: f64,
    hrv: f64,
    gsr: f64,
    tonic: f64,
    count: [f64; 5],
    duration: [f64; 5],
    dispersion: [f64; 5],
    offset: f64,
}

fn draw_traits(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Traits {
    let mut count = [0.0; 5];
    let mut duration = [0.0; 5];
    let mut dispersion = [0.0; 5];
    for aoi in Aoi::ALL {
        let k = aoi.index();
        count[k] = if is_busy(aoi) {
            normal(rng, 12.0, 3.0)
        } else {
            normal(rng, 2.0, 0.7)
        };
        let (mu, sd) = duration_prior(aoi);
        duration[k] = normal(rng, mu, sd);
        dispersion[k] = rng.random_range(0.06..0.16);
    }
    Traits {
        hr: normal(rng, 72.0, 6.0),
        hrv: normal(rng, 40.0, 10.0).clamp(15.0, 80.0),
        gsr: rng.random_range(0.012..0.03),
        tonic: rng.random_range(1.5..8.0),
        count,
        duration,
        dispersion,
        offset: if cfg.participant_sd > 0.0 {
            normal(rng, 0.0, cfg.participant_sd)
        } else {
            0.0
        },
    }
}

fn point_in(rng: &mut ChaCha8Rng, r: &Rect, margin: f64) -> GazePoint {
    GazePoint::new(
        rng.random_range(r.x0 + margin..r.x1 - margin),
        rng.random_range(r.y0 + margin..r.y1 - margin),
    )
}

fn plan_fixations(rng: &mut ChaCha8Rng, t: &Traits, start_ms: f64) -> Vec<PlannedFixation> {
    let layout = AoiConfig::default();
    let mut slots: Vec<Option<Aoi>> = Vec::new();
    for aoi in Aoi::ALL {
        let k = aoi.index();
        let (sd, max) = if is_busy(aoi) { (4.0, 28.0) } else { (1.2, 6.0) };
        let n = normal(rng, t.count[k], sd).round().clamp(0.0, max) as usize;
        slots.extend(std::iter::repeat_n(Some(aoi), n));
    }
    slots.extend(std::iter::repeat_n(None, rng.random_range(0..=3)));
    slots.shuffle(rng);

    let mut durations: Vec<f64> = slots
        .iter()
        .map(|s| {
            let mu = s.map_or(260.0, |a| t.duration[a.index()]);
            round_to(normal(rng, mu, 45.0), GAZE_DT_MS).clamp(MIN_FIXATION_MS, MAX_FIXATION_MS)
        })
        .collect();
    let n = slots.len();
    let avail = WINDOW_MS - 2.0 * EDGE_MS - MIN_GAP_MS * (n + 1) as f64;
    let total: f64 = durations.iter().sum();
    if total > avail {
        let scale = avail / total;
        for d in &mut durations {
            *d = ((*d * scale / GAZE_DT_MS).floor() * GAZE_DT_MS).max(MIN_FIXATION_MS);
        }
    }
    let free = (avail - durations.iter().sum::<f64>()).max(0.0);
    let weights: Vec<f64> = (0..=n).map(|_| rng.random::<f64>()).collect();
    let wsum: f64 = weights.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let gaps: Vec<f64> = weights
        .iter()
        .map(|w| MIN_GAP_MS + (w / wsum * free / GAZE_DT_MS).floor() * GAZE_DT_MS)
        .collect();

    let mut out = Vec::with_capacity(n);
    let mut cursor = start_ms + EDGE_MS + gaps[0];
    for (i, slot) in slots.into_iter().enumerate() {
        let radius = match slot {
            Some(a) => normal(rng, t.dispersion[a.index()], 0.03),
            None => normal(rng, 0.1, 0.03),
        }
        .clamp(MIN_RADIUS_DEG, MAX_RADIUS_DEG);
        let rect = slot.map_or(NONE_REGION, |a| *layout.rect(a));
        out.push(PlannedFixation {
            start_ms: cursor,
            duration_ms: durations[i],
            centroid: point_in(rng, &rect, 1.0),
            radius_deg: radius,
            phase: rng.random_range(0.0..2.0 * PI),
            aoi: slot,
        });
        cursor += durations[i] + gaps[i + 1];
    }
    out
}

/// Beat times for one window: alternating intervals around the mean that
/// fills the window, so successive differences are all `hrv` in size.
fn plan_beats(prev_beat: f64, end_ms: f64, hr: f64, hrv: f64) -> Vec<f64> {
    let last = end_ms - BEAT_LEAD_MS;
    let span = last - prev_beat;
    let n = ((span * hr / 60_000.0).round() as usize).max(2);
    let half = hrv / 2.0;
    // odd counts carry one more long interval than short ones
    let mean = if n.is_multiple_of(2) {
        span / n as f64
    } else {
        (span - half) / n as f64
    };
    let mut beats = Vec::with_capacity(n);
    let mut t = prev_beat;
    for i in 0..n - 1 {
        t += if i % 2 == 0 { mean + half } else { mean - half };
        beats.push(round_to(t, 1.0 / 64.0));
    }
    beats.push(last);
    beats
}

fn intervals(prev: f64, beats: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(beats.len());
    let mut p = prev;
    for &b in beats {
        out.push(b - p);
        p = b;
    }
    out
}

fn integer_in(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> f64 {
    rng.random_range(lo..=hi) as f64
}

#[allow(clippy::too_many_arguments)]
fn plan_drive(
    cfg: &SynthConfig,
    traits: &Traits,
    demo_values: [(usize, f64); 3],
    effects: &[(usize, f64)],
    participant: usize,
    drive: usize,
    n_windows: usize,
) -> DrivePlan {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[participant as u64, drive as u64 + 1]));
    let drive_start_ms = integer_in(&mut rng, 2_000, 60_000);
    let drive_end_ms = drive_start_ms + n_windows as f64 * WINDOW_MS + integer_in(&mut rng, 5_000, 25_000);
    let info = |delay: f64, rate: f64| DeviceInfo {
        delay_ms: delay,
        nominal_rate_hz: rate,
    };
    let devices = Devices {
        gsr: info(integer_in(&mut rng, 0, 500), GSR_RATE_HZ),
        ibi: info(integer_in(&mut rng, 0, 500), 1.0),
        gaze: info(integer_in(&mut rng, -300, 300), 1000.0 / GAZE_DT_MS),
        sa: info(integer_in(&mut rng, 0, 2_000), 1000.0 / WINDOW_MS),
    };
    let mut tor_events_ms: Vec<f64> = (0..2)
        .map(|_| integer_in(&mut rng, drive_start_ms as i64, drive_end_ms as i64 - 1))
        .collect();
    tor_events_ms.sort_by(f64::total_cmp);
    let anchor_beat_ms = drive_start_ms - BEAT_LEAD_MS;
    let mut plan = DrivePlan {
        drive_id: format!("D{}", drive + 1),
        drive_start_ms,
        drive_end_ms,
        devices,
        tonic_base: traits.tonic,
        tonic_swing: 0.005,
        tor_events_ms,
        anchor_beat_ms,
        windows: Vec::with_capacity(n_windows),
    };

    let mut prev_beat = anchor_beat_ms;
    for w in 0..n_windows {
        let start_ms = drive_start_ms + w as f64 * WINDOW_MS;
        let end_ms = start_ms + WINDOW_MS;

        let gsr_target = normal(&mut rng, traits.gsr, 0.006).clamp(0.006, 0.06);
        // three bumps, at least 5 s apart and 3.5 s from the window edges
        let slack: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let ssum: f64 = slack.iter().sum();
        let room = WINDOW_MS - 7_000.0 - 10_000.0;
        let mut c = start_ms + 3_500.0;
        let mut gsr_centers = [0.0; GSR_BUMPS];
        for (k, center) in gsr_centers.iter_mut().enumerate() {
            c += (slack[k] / ssum * room).floor() + if k > 0 { 5_000.0 } else { 0.0 };
            *center = c;
        }

        let hr = normal(&mut rng, traits.hr, 5.0).clamp(50.0, 115.0);
        let hrv = normal(&mut rng, traits.hrv, 8.0).clamp(10.0, 100.0);
        let beats = plan_beats(prev_beat, end_ms, hr, hrv);
        let ivals = intervals(prev_beat, &beats);
        prev_beat = *beats.last().unwrap();

        let fixations = plan_fixations(&mut rng, traits, start_ms);
        let prompt_ms = end_ms + integer_in(&mut rng, 0, 4_000);

        let mut window = WindowPlan {
            index: w,
            start_ms,
            end_ms,
            // window mean of the bumps equals the target when the amplitude
            // is 20x the target (3 bumps x 0.5 s mean area over 30 s)
            gsr_amplitude: gsr_target * WINDOW_MS / (GSR_BUMPS as f64 * GSR_BUMP_MS * 0.5),
            gsr_centers,
            beats,
            fixations,
            prompt_ms,
            intended: [None; N_FEATURES],
            latent: 0.0,
            sa_label: 0,
        };

        let mut intended = [None; N_FEATURES];
        for (j, v) in demo_values {
            intended[j] = Some(v);
        }
        let per_window = (WINDOW_MS / GSR_DT_MS).round() as usize;
        let first = (w * per_window) as f64;
        let gsr_mean = (0..per_window)
            .map(|k| window.gsr_bump(drive_start_ms + (first + k as f64) * GSR_DT_MS))
            .sum::<f64>()
            / per_window as f64;
        intended[MEAN_GSR] = Some(gsr_mean);
        intended[MEAN_HR] = hr_from_ibi(&ivals);
        intended[MEAN_HRV] = rmssd(&ivals, RmssdMode::Standard);
        for aoi in Aoi::ALL {
            let k = aoi.index();
            let mine: Vec<&PlannedFixation> = window.fixations.iter().filter(|f| f.aoi == Some(aoi)).collect();
            intended[FIXATION_COUNT_BASE + k] = Some(mine.len() as f64);
            if !mine.is_empty() {
                let n = mine.len() as f64;
                intended[DURATION_BASE + k] = Some(mine.iter().map(|f| f.duration_ms).sum::<f64>() / n);
                intended[DISPERSION_BASE + k] = Some(mine.iter().map(|f| f.radius_deg).sum::<f64>() / n);
            }
        }

        let signal: f64 = effects
            .iter()
            .map(|&(j, weight)| {
                let (mu, sd) = nominal(j);
                intended[j].map_or(0.0, |v| weight * (v - mu) / sd)
            })
            .sum();
        let noise = if cfg.noise_sd > 0.0 {
            normal(&mut rng, 0.0, cfg.noise_sd)
        } else {
            0.0
        };
        window.latent = signal + traits.offset + noise;
        window.sa_label = (LABEL_CENTER + LABEL_SCALE * window.latent).round().clamp(0.0, 3.0) as u8;
        window.intended = intended;
        plan.windows.push(window);
    }
    plan
}

fn plan_participant(cfg: &SynthConfig, index: usize, schedule: &[usize], effects: &[(usize, f64)]) -> ParticipantPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[index as u64]));
    let age = rng.random_range(19..=70u32);
    let gender = rng.random_range(0..GENDERS.len());
    let av = rng.random_range(0..AV_KNOWLEDGE_LEVELS.len());
    let traits = draw_traits(&mut rng, cfg);
    let demo_values = [(AGE, age as f64), (GENDER, gender as f64), (AV_KNOWLEDGE, av as f64)];
    let width = cfg.n_participants.to_string().len().max(2);
    ParticipantPlan {
        participant_id: format!("P{:0width$}", index + 1),
        demographics: Demographics {
            age,
            gender: GENDERS[gender].to_string(),
            av_knowledge: AV_KNOWLEDGE_LEVELS[av].to_string(),
        },
        drives: schedule
            .iter()
            .enumerate()
            .map(|(d, &n)| plan_drive(cfg, &traits, demo_values, effects, index, d, n))
            .collect(),
    }
}

/// Window-level plan of a whole study.
pub fn plan_study(cfg: &SynthConfig) -> Result<StudyPlan> {
    cfg.validate()?;
    let schedule = cfg.schedule()?;
    let effects: Vec<(usize, f64)> = cfg
        .effects
        .iter()
        .map(|e| (feature_index(&e.feature).unwrap(), e.direction.sign() * e.strength))
        .collect();
    let per = cfg.drives_per_participant;
    let participants = (0..cfg.n_participants)
        .into_par_iter()
        .map(|p| plan_participant(cfg, p, &schedule[p * per..(p + 1) * per], &effects))
        .collect();
    Ok(StudyPlan { participants })
}
