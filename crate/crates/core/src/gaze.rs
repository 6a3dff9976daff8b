//! Dispersion-threshold fixation identification (I-DT), area-of-interest
//! assignment and the per-window gaze metrics.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timebase::{Sample, TimedSeries, Window};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GazePoint {
    pub x_deg: f64,
    pub y_deg: f64,
}

impl GazePoint {
    pub fn new(x_deg: f64, y_deg: f64) -> Self {
        GazePoint { x_deg, y_deg }
    }
}

/// Named screen regions, in feature-table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aoi {
    Center,
    Game,
    Left,
    Right,
    Odometer,
}

impl Aoi {
    pub const ALL: [Aoi; 5] = [Aoi::Center, Aoi::Game, Aoi::Left, Aoi::Right, Aoi::Odometer];

    pub fn name(self) -> &'static str {
        match self {
            Aoi::Center => "center",
            Aoi::Game => "game",
            Aoi::Left => "left",
            Aoi::Right => "right",
            Aoi::Odometer => "odometer",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Half-open rectangle `[x0, x1) × [y0, y1)` in degrees of visual angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn contains(&self, p: GazePoint) -> bool {
        self.x0 <= p.x_deg && p.x_deg < self.x1 && self.y0 <= p.y_deg && p.y_deg < self.y1
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AoiConfig {
    pub center: Rect,
    pub game: Rect,
    pub left: Rect,
    pub right: Rect,
    pub odometer: Rect,
}

impl Default for AoiConfig {
    /// Synthetic three-monitor layout with a tablet to the lower right and the
    /// instrument cluster below the center screen.
    fn default() -> Self {
        AoiConfig {
            center: Rect::new(-15.0, 15.0, -5.0, 15.0),
            game: Rect::new(20.0, 40.0, -30.0, -10.0),
            left: Rect::new(-45.0, -15.0, -5.0, 15.0),
            right: Rect::new(15.0, 45.0, -5.0, 15.0),
            odometer: Rect::new(-8.0, 8.0, -12.0, -6.0),
        }
    }
}

impl AoiConfig {
    pub fn rect(&self, aoi: Aoi) -> &Rect {
        match aoi {
            Aoi::Center => &self.center,
            Aoi::Game => &self.game,
            Aoi::Left => &self.left,
            Aoi::Right => &self.right,
            Aoi::Odometer => &self.odometer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for aoi in Aoi::ALL {
            let r = self.rect(aoi);
            let finite = [r.x0, r.x1, r.y0, r.y1].iter().all(|v| v.is_finite());
            if !finite || r.x0 >= r.x1 || r.y0 >= r.y1 {
                return Err(Error::Config(format!("AOI `{}` is not a proper rectangle", aoi.name())));
            }
        }
        for (i, a) in Aoi::ALL.iter().enumerate() {
            for b in &Aoi::ALL[i + 1..] {
                if self.rect(*a).overlaps(self.rect(*b)) {
                    return Err(Error::Config(format!("AOIs `{}` and `{}` overlap", a.name(), b.name())));
                }
            }
        }
        Ok(())
    }

    /// Region containing `p`, if any.
    pub fn locate(&self, p: GazePoint) -> Option<Aoi> {
        Aoi::ALL.into_iter().find(|&a| self.rect(a).contains(p))
    }
}

/// How the duration threshold constrains a fixation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationRule {
    /// Classic I-DT: a fixation must last at least the threshold.
    #[default]
    Minimum,
    /// Fixations are capped at the threshold; any window of two or more
    /// samples within the dispersion limit is emitted.
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdtParams {
    pub max_dispersion_deg: f64,
    pub duration_ms: f64,
    pub duration_rule: DurationRule,
}

impl Default for IdtParams {
    fn default() -> Self {
        IdtParams {
            max_dispersion_deg: 1.0,
            duration_ms: 200.0,
            duration_rule: DurationRule::Minimum,
        }
    }
}

impl IdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_dispersion_deg.is_finite() && self.max_dispersion_deg > 0.0) {
            return Err(Error::Config("idt.max_dispersion_deg must be positive".into()));
        }
        if !(self.duration_ms.is_finite() && self.duration_ms >= 0.0) {
            return Err(Error::Config("idt.duration_ms must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub start_ms: f64,
    pub end_ms: f64,
    pub centroid: GazePoint,
    /// `(max x - min x) + (max y - min y)` over the member samples.
    pub detection_dispersion_deg: f64,
    /// Mean distance of the member samples from their centroid.
    pub feature_dispersion_deg: f64,
    pub n_samples: usize,
    pub aoi: Option<Aoi>,
}

impl Fixation {
    pub fn duration_ms(&self) -> f64 {
        self.end_ms - self.start_ms
    }

    pub fn midpoint_ms(&self) -> f64 {
        0.5 * (self.start_ms + self.end_ms)
    }

    fn from_samples(samples: &[Sample<GazePoint>]) -> Self {
        let points: Vec<GazePoint> = samples.iter().map(|s| s.value).collect();
        Fixation {
            start_ms: samples[0].t_ms,
            end_ms: samples[samples.len() - 1].t_ms,
            centroid: centroid(&points),
            detection_dispersion_deg: detection_dispersion(&points),
            feature_dispersion_deg: fixation_feature_dispersion(&points),
            n_samples: samples.len(),
            aoi: None,
        }
    }
}

pub fn centroid(points: &[GazePoint]) -> GazePoint {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x_deg, sy + p.y_deg));
    GazePoint::new(sx / n, sy / n)
}

pub fn detection_dispersion(points: &[GazePoint]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x_deg);
        x1 = x1.max(p.x_deg);
        y0 = y0.min(p.y_deg);
        y1 = y1.max(p.y_deg);
    }
    (x1 - x0) + (y1 - y0)
}

/// Mean Euclidean distance of `points` from their centroid.
pub fn fixation_feature_dispersion(points: &[GazePoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let c = centroid(points);
    let total: f64 = points
        .iter()
        .map(|p| (p.x_deg - c.x_deg).hypot(p.y_deg - c.y_deg))
        .sum();
    total / points.len() as f64
}

/// Sliding min/max over an index window whose bounds only move forward.
struct Extrema<'a> {
    values: &'a [f64],
    min: VecDeque<usize>,
    max: VecDeque<usize>,
}

impl<'a> Extrema<'a> {
    fn new(values: &'a [f64]) -> Self {
        Extrema {
            values,
            min: VecDeque::new(),
            max: VecDeque::new(),
        }
    }

    fn push(&mut self, i: usize) {
        let v = self.values[i];
        while self.min.back().is_some_and(|&j| self.values[j] >= v) {
            self.min.pop_back();
        }
        self.min.push_back(i);
        while self.max.back().is_some_and(|&j| self.values[j] <= v) {
            self.max.pop_back();
        }
        self.max.push_back(i);
    }

    fn evict_before(&mut self, start: usize) {
        while self.min.front().is_some_and(|&j| j < start) {
            self.min.pop_front();
        }
        while self.max.front().is_some_and(|&j| j < start) {
            self.max.pop_front();
        }
    }

    fn clear(&mut self) {
        self.min.clear();
        self.max.clear();
    }

    fn range(&self) -> (f64, f64) {
        (self.values[self.min[0]], self.values[self.max[0]])
    }
}

struct Window2d<'a> {
    x: Extrema<'a>,
    y: Extrema<'a>,
}

impl<'a> Window2d<'a> {
    fn push(&mut self, i: usize) {
        self.x.push(i);
        self.y.push(i);
    }

    fn evict_before(&mut self, start: usize) {
        self.x.evict_before(start);
        self.y.evict_before(start);
    }

    fn clear(&mut self) {
        self.x.clear();
        self.y.clear();
    }

    fn dispersion(&self) -> f64 {
        let (x0, x1) = self.x.range();
        let (y0, y1) = self.y.range();
        (x1 - x0) + (y1 - y0)
    }

    fn dispersion_with(&self, x: f64, y: f64) -> f64 {
        let (x0, x1) = self.x.range();
        let (y0, y1) = self.y.range();
        (x1.max(x) - x0.min(x)) + (y1.max(y) - y0.min(y))
    }
}

/// I-DT fixation detection over a delay-corrected gaze stream.
///
/// Fixations come back time-ordered and non-overlapping, with `aoi` unset;
/// see [`label_fixations`].
pub fn detect_fixations_idt(gaze: &TimedSeries<GazePoint>, params: &IdtParams) -> Vec<Fixation> {
    detect_in_samples(gaze.samples(), params)
}

pub fn detect_in_samples(samples: &[Sample<GazePoint>], params: &IdtParams) -> Vec<Fixation> {
    match params.duration_rule {
        DurationRule::Minimum => idt_minimum(samples, params.max_dispersion_deg, params.duration_ms),
        DurationRule::Maximum => idt_maximum(samples, params.max_dispersion_deg, params.duration_ms),
    }
}

fn idt_minimum(samples: &[Sample<GazePoint>], max_disp: f64, min_dur: f64) -> Vec<Fixation> {
    let n = samples.len();
    let t: Vec<f64> = samples.iter().map(|s| s.t_ms).collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.value.x_deg).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.value.y_deg).collect();
    let mut win = Window2d {
        x: Extrema::new(&xs),
        y: Extrema::new(&ys),
    };
    let mut out = Vec::new();
    // window is samples[start..end)
    let (mut start, mut end) = (0usize, 0usize);
    while start < n {
        while end < n && (end <= start || t[end - 1] - t[start] < min_dur) {
            win.push(end);
            end += 1;
        }
        if t[end - 1] - t[start] < min_dur {
            break;
        }
        win.evict_before(start);
        if win.dispersion() <= max_disp {
            while end < n && win.dispersion_with(xs[end], ys[end]) <= max_disp {
                win.push(end);
                end += 1;
            }
            out.push(Fixation::from_samples(&samples[start..end]));
            start = end;
            win.clear();
        } else {
            start += 1;
        }
    }
    out
}

fn idt_maximum(samples: &[Sample<GazePoint>], max_disp: f64, max_dur: f64) -> Vec<Fixation> {
    let n = samples.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let (mut x0, mut x1) = (samples[start].value.x_deg, samples[start].value.x_deg);
        let (mut y0, mut y1) = (samples[start].value.y_deg, samples[start].value.y_deg);
        let mut end = start + 1;
        while end < n {
            let p = samples[end].value;
            let d = (x1.max(p.x_deg) - x0.min(p.x_deg)) + (y1.max(p.y_deg) - y0.min(p.y_deg));
            if d > max_disp || samples[end].t_ms - samples[start].t_ms > max_dur {
                break;
            }
            x0 = x0.min(p.x_deg);
            x1 = x1.max(p.x_deg);
            y0 = y0.min(p.y_deg);
            y1 = y1.max(p.y_deg);
            end += 1;
        }
        if end - start >= 2 {
            out.push(Fixation::from_samples(&samples[start..end]));
            start = end;
        } else {
            start += 1;
        }
    }
    out
}

/// Region whose rectangle contains the fixation centroid.
pub fn assign_aoi(f: &Fixation, cfg: &AoiConfig) -> Option<Aoi> {
    cfg.locate(f.centroid)
}

pub fn label_fixations(fixations: &mut [Fixation], cfg: &AoiConfig) {
    for f in fixations {
        f.aoi = assign_aoi(f, cfg);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AoiMetrics {
    pub number_of_fixations: u32,
    pub mean_duration_ms: Option<f64>,
    pub mean_dispersion_deg: Option<f64>,
}

/// The fifteen per-AOI window metrics, indexed by [`Aoi::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeWindowMetrics {
    pub per_aoi: [AoiMetrics; 5],
}

impl GazeWindowMetrics {
    pub fn get(&self, aoi: Aoi) -> &AoiMetrics {
        &self.per_aoi[aoi.index()]
    }
}

/// Counts, mean durations and mean feature dispersions per AOI for the
/// fixations whose midpoint lies in `w`. Fixations outside every AOI are
/// ignored.
pub fn gaze_window_metrics(fixations: &[Fixation], w: &Window, cfg: &AoiConfig) -> GazeWindowMetrics {
    let mut sums = [(0u32, 0.0f64, 0.0f64); 5];
    let first = fixations.partition_point(|f| f.end_ms < w.start_ms);
    for f in &fixations[first..] {
        if f.start_ms >= w.end_ms {
            break;
        }
        if !w.contains(f.midpoint_ms()) {
            continue;
        }
        if let Some(aoi) = assign_aoi(f, cfg) {
            let s = &mut sums[aoi.index()];
            s.0 += 1;
            s.1 += f.duration_ms();
            s.2 += f.feature_dispersion_deg;
        }
    }
    let mut out = GazeWindowMetrics::default();
    for (m, (count, dur, disp)) in out.per_aoi.iter_mut().zip(sums) {
        m.number_of_fixations = count;
        if count > 0 {
            m.mean_duration_ms = Some(dur / count as f64);
            m.mean_dispersion_deg = Some(disp / count as f64);
        }
    }
    out
}
