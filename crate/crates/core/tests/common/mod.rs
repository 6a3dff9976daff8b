//! Independent reference implementations shared by the integration tests and
//! the acceptance harness. Each one is written from the definition, favouring
//! clarity over speed.

#![allow(dead_code)]

pub mod checks;

use rand::Rng;
use sa_core::gaze::GazePoint;
use sa_core::gbdt::{Node, Tree};
use sa_core::timebase::Sample;

// ---------------------------------------------------------------- Shapley

/// Cover-weighted expectation of a tree's output when only the features in
/// `known` are fixed to the row's values.
pub fn conditional_expectation(tree: &Tree, node: usize, row: &[f64], known: &[bool]) -> f64 {
    let n = &tree.nodes[node];
    match n.split_parts() {
        None => match n {
            Node::Leaf { value, .. } => *value,
            _ => unreachable!(),
        },
        Some((feature, left, right)) => {
            if known[feature] {
                conditional_expectation(tree, n.next(row), row, known)
            } else {
                let cl = tree.nodes[left].cover() as f64;
                let cr = tree.nodes[right].cover() as f64;
                (cl * conditional_expectation(tree, left, row, known)
                    + cr * conditional_expectation(tree, right, row, known))
                    / (cl + cr)
            }
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Exact Shapley values by enumerating every coalition of the `m` features.
pub fn brute_force_shap(tree: &Tree, row: &[f64], m: usize) -> Vec<f64> {
    let mut phi = vec![0.0; m];
    for i in 0..m {
        for mask in 0u32..(1 << m) {
            if mask & (1 << i) != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = factorial(s) * factorial(m - s - 1) / factorial(m);
            let mut known: Vec<bool> = (0..m).map(|j| mask & (1 << j) != 0).collect();
            let without = conditional_expectation(tree, 0, row, &known);
            known[i] = true;
            let with = conditional_expectation(tree, 0, row, &known);
            phi[i] += weight * (with - without);
        }
    }
    phi
}

/// Random numeric tree over `m` features with consistent covers.
pub fn random_tree(rng: &mut impl Rng, m: usize, max_depth: usize) -> Tree {
    fn grow(rng: &mut impl Rng, nodes: &mut Vec<Node>, m: usize, depth: usize, max_depth: usize, cover: u32) -> usize {
        let idx = nodes.len();
        nodes.push(Node::Leaf { value: 0.0, cover });
        if depth < max_depth && cover >= 2 && rng.random_bool(0.75) {
            let left_cover = rng.random_range(1..cover);
            let feature = rng.random_range(0..m);
            let threshold = rng.random::<f64>();
            let default_left = rng.random_bool(0.5);
            let left = grow(rng, nodes, m, depth + 1, max_depth, left_cover);
            let right = grow(rng, nodes, m, depth + 1, max_depth, cover - left_cover);
            nodes[idx] = Node::Numeric {
                feature,
                threshold,
                default_left,
                cover,
                left,
                right,
            };
        } else {
            nodes[idx] = Node::Leaf {
                value: rng.random_range(-5.0..5.0),
                cover,
            };
        }
        idx
    }
    let mut nodes = Vec::new();
    let cover = rng.random_range(2..1000);
    grow(rng, &mut nodes, m, 0, max_depth, cover);
    Tree { nodes }
}

/// Row of `m` uniform values with the occasional missing entry.
pub fn random_row(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    (0..m)
        .map(|_| {
            if rng.random_bool(0.1) {
                f64::NAN
            } else {
                rng.random::<f64>()
            }
        })
        .collect()
}

// ---------------------------------------------------------------- splits

/// Feature, left-going row mask and gain of an exhaustive-search split.
pub struct OracleSplit {
    pub feature: usize,
    pub left: Vec<bool>,
    pub gain: f64,
}

/// Variance-reduction gain of a partition under unit hessians.
pub fn split_gain(grad: &[f64], left: &[bool]) -> f64 {
    let (mut gl, mut gr, mut nl, mut nr) = (0.0, 0.0, 0.0, 0.0);
    for (g, &l) in grad.iter().zip(left) {
        if l {
            gl += g;
            nl += 1.0;
        } else {
            gr += g;
            nr += 1.0;
        }
    }
    let g = gl + gr;
    gl * gl / nl + gr * gr / nr - g * g / (nl + nr)
}

/// Best split found by trying every threshold between consecutive distinct
/// raw values, with unit hessians and no regularization. Ties keep the
/// lowest feature, then the lowest threshold.
pub fn exhaustive_split(columns: &[Vec<f64>], grad: &[f64], min_data: usize, min_gain: f64) -> Option<OracleSplit> {
    let mut best: Option<OracleSplit> = None;
    for (j, col) in columns.iter().enumerate() {
        let mut distinct = col.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        for pair in distinct.windows(2) {
            let cut = pair[0];
            let left: Vec<bool> = col.iter().map(|&v| v <= cut).collect();
            let nl = left.iter().filter(|&&l| l).count();
            if nl < min_data || col.len() - nl < min_data {
                continue;
            }
            let gain = split_gain(grad, &left);
            let threshold_gain = best.as_ref().map_or(min_gain, |b| b.gain);
            if gain > threshold_gain {
                best = Some(OracleSplit { feature: j, left, gain });
            }
        }
    }
    best
}

// ---------------------------------------------------------------- I-DT

fn dispersion(points: &[Sample<GazePoint>]) -> f64 {
    let xs = points.iter().map(|p| p.value.x_deg);
    let ys = points.iter().map(|p| p.value.y_deg);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    (x1 - x0) + (y1 - y0)
}

/// Textbook I-DT recomputing the dispersion from scratch at every step.
/// Returns inclusive `(first, last)` sample indices of each fixation.
pub fn idt_reference(s: &[Sample<GazePoint>], max_disp: f64, min_dur: f64) -> Vec<(usize, usize)> {
    let n = s.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let Some(mut j) = (i..n).find(|&j| s[j].t_ms - s[i].t_ms >= min_dur) else {
            break;
        };
        if dispersion(&s[i..=j]) <= max_disp {
            while j + 1 < n && dispersion(&s[i..=j + 1]) <= max_disp {
                j += 1;
            }
            out.push((i, j));
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Gaze trace alternating jittered fixation clusters and fast jumps, with
/// slightly irregular sample spacing around `period_ms`.
pub fn random_gaze_trace(rng: &mut impl Rng, period_ms: f64, n_segments: usize) -> Vec<Sample<GazePoint>> {
    let mut out = Vec::new();
    let mut t = rng.random_range(0.0..1000.0);
    for _ in 0..n_segments {
        let cx = rng.random_range(-20.0..20.0);
        let cy = rng.random_range(-15.0..15.0);
        let jitter = rng.random_range(0.02..0.7);
        let dur = rng.random_range(20.0..700.0);
        let end = t + dur;
        while t < end {
            let p = GazePoint::new(
                cx + rng.random_range(-jitter..=jitter),
                cy + rng.random_range(-jitter..=jitter),
            );
            out.push(Sample::new(t, p));
            t += period_ms * rng.random_range(0.8..1.2);
        }
        for _ in 0..rng.random_range(0..4) {
            let p = GazePoint::new(rng.random_range(-30.0..30.0), rng.random_range(-20.0..20.0));
            out.push(Sample::new(t, p));
            t += period_ms * rng.random_range(0.8..1.2);
        }
    }
    out
}

// ---------------------------------------------------------------- HRV and metrics

/// RMSSD written term by term: successive differences `RR[i+1] - RR[i]` for
/// `i = 0..N-2`, squared and summed.
pub fn rmssd_direct(rr: &[f64], divide: bool) -> Option<f64> {
    let n = rr.len();
    if n < 2 {
        return None;
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 1 < n {
        let d = rr[i + 1] - rr[i];
        total += d * d;
        i += 1;
    }
    Some(if divide {
        (total / (n - 1) as f64).sqrt()
    } else {
        total.sqrt()
    })
}

pub fn naive_rmse(y: &[f64], yhat: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - yhat[i]).powi(2);
    }
    (s / y.len() as f64).sqrt()
}

pub fn naive_mae(y: &[f64], yhat: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - yhat[i]).abs();
    }
    s / y.len() as f64
}

pub fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = (0..x.len()).map(|i| (x[i] - mx) * (y[i] - my)).sum();
    let vx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

/// Ranks by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let smaller = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn naive_spearman(x: &[f64], y: &[f64]) -> f64 {
    naive_pearson(&naive_ranks(x), &naive_ranks(y))
}

/// Spearman for tie-free data: `1 - 6 Σd² / (n(n² - 1))`.
pub fn spearman_no_ties(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (naive_ranks(x), naive_ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

// ---------------------------------------------------------------- artifacts

/// A study small enough for a full pipeline run in a few seconds.
pub const SMALL_CONFIG: &str = r#"
[synth]
n_participants = 6
total_windows = 120

[cv]
k = 5

[selection]
k_max = 8

[train]
max_rounds = 300
"#;

/// Every file under `root`, keyed by relative path.
pub fn tree_bytes(root: &std::path::Path) -> std::collections::BTreeMap<std::path::PathBuf, Vec<u8>> {
    fn walk(
        root: &std::path::Path,
        dir: &std::path::Path,
        out: &mut std::collections::BTreeMap<std::path::PathBuf, Vec<u8>>,
    ) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = std::collections::BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Relative paths whose contents differ between two trees, including files
/// present on one side only.
pub fn tree_diff(a: &std::path::Path, b: &std::path::Path) -> Vec<std::path::PathBuf> {
    let (ta, tb) = (tree_bytes(a), tree_bytes(b));
    let mut keys: Vec<_> = ta.keys().chain(tb.keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().filter(|k| ta.get(k) != tb.get(k)).collect()
}
