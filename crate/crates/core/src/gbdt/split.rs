//! Histogram accumulation and best-split search.

use std::ops::{Add, AddAssign, Sub};

use super::binning::{BinMapper, BinnedMatrix};

/// Gains at or below this value are treated as "no improvement".
pub const MIN_SPLIT_GAIN: f64 = 1e-10;

/// Gradient sum, hessian sum and row count of a set of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeStats {
    pub g: f64,
    pub h: f64,
    pub n: u32,
}

impl Add for NodeStats {
    type Output = NodeStats;
    fn add(self, o: NodeStats) -> NodeStats {
        NodeStats {
            g: self.g + o.g,
            h: self.h + o.h,
            n: self.n + o.n,
        }
    }
}

impl AddAssign for NodeStats {
    fn add_assign(&mut self, o: NodeStats) {
        self.g += o.g;
        self.h += o.h;
        self.n += o.n;
    }
}

impl Sub for NodeStats {
    type Output = NodeStats;
    fn sub(self, o: NodeStats) -> NodeStats {
        NodeStats {
            g: self.g - o.g,
            h: self.h - o.h,
            n: self.n - o.n,
        }
    }
}

impl NodeStats {
    pub fn score(&self, lambda: f64) -> f64 {
        self.g * self.g / (self.h + lambda)
    }

    /// Optimal (unscaled) leaf output `-G / (H + lambda)`.
    pub fn leaf_value(&self, lambda: f64) -> f64 {
        -self.g / (self.h + lambda)
    }
}

/// Flattened per-feature histograms, laid out by [`BinnedMatrix::offsets`].
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<NodeStats>,
}

impl Histogram {
    pub fn zeros(total_bins: usize) -> Self {
        Histogram {
            bins: vec![NodeStats::default(); total_bins],
        }
    }

    /// Accumulates `rows` feature by feature, in the given row order.
    pub fn build(binned: &BinnedMatrix, rows: &[u32], grad: &[f64], hess: &[f64]) -> Self {
        let mut hist = Histogram::zeros(binned.total_bins);
        hist.fill(binned, rows, grad, hess);
        hist
    }

    /// Like [`Histogram::build`], reusing this histogram's storage.
    pub fn rebuild(&mut self, binned: &BinnedMatrix, rows: &[u32], grad: &[f64], hess: &[f64]) {
        self.bins.clear();
        self.bins.resize(binned.total_bins, NodeStats::default());
        self.fill(binned, rows, grad, hess);
    }

    fn fill(&mut self, binned: &BinnedMatrix, rows: &[u32], grad: &[f64], hess: &[f64]) {
        for (j, col) in binned.bins.iter().enumerate() {
            let h = &mut self.bins[binned.offsets[j]..];
            for &r in rows {
                let r = r as usize;
                let b = &mut h[col[r] as usize];
                b.g += grad[r];
                b.h += hess[r];
                b.n += 1;
            }
        }
    }

    /// `self - other`, in place.
    pub fn subtract(&mut self, other: &Histogram) {
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a = *a - *b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Rows with bin `<= bin` (value `<= threshold`) go left.
    Numeric { bin: u16, threshold: f64 },
    /// Rows whose category is listed go left; the list is sorted.
    Categorical { categories: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub rule: SplitRule,
    /// Direction taken by missing values.
    pub default_left: bool,
    pub gain: f64,
    pub left: NodeStats,
    pub right: NodeStats,
}

impl SplitCandidate {
    /// Routes a binned value.
    pub fn goes_left(&self, bin: u16, missing_bin: u16) -> bool {
        if bin == missing_bin {
            return self.default_left;
        }
        match &self.rule {
            SplitRule::Numeric { bin: b, .. } => bin <= *b,
            SplitRule::Categorical { categories } => categories.binary_search(&(bin as u32)).is_ok(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitConstraints {
    pub min_data_in_leaf: u32,
    pub lambda_l2: f64,
}

struct Best {
    cand: Option<SplitCandidate>,
    gain: f64,
}

impl Best {
    fn beats(&self, gain: f64) -> bool {
        gain > self.gain
    }

    /// Gain of splitting into `left`/`right` when it beats the current best.
    #[inline]
    fn improved_gain(&self, left: NodeStats, right: NodeStats, parent: f64, lambda: f64) -> Option<f64> {
        let gain = left.score(lambda) + right.score(lambda) - parent;
        self.beats(gain).then_some(gain)
    }
}

/// Best split of a node given its histogram, or `None` when no split has
/// positive gain with both children holding at least `min_data_in_leaf`
/// rows. Ties keep the lowest feature index, then the lowest bin.
pub fn find_best_split(
    hist: &Histogram,
    total: NodeStats,
    binned: &BinnedMatrix,
    cons: SplitConstraints,
) -> Option<SplitCandidate> {
    if total.n < 2 * cons.min_data_in_leaf {
        return None;
    }
    let parent = total.score(cons.lambda_l2);
    let mut best = Best {
        cand: None,
        gain: MIN_SPLIT_GAIN,
    };
    for (j, mapper) in binned.mappers.iter().enumerate() {
        let off = binned.offsets[j];
        let fh = &hist.bins[off..off + mapper.n_bins() + 1];
        match mapper {
            BinMapper::Numeric { .. } => scan_numeric(j, mapper, fh, total, parent, cons, &mut best),
            BinMapper::Categorical { .. } => scan_categorical(j, fh, total, parent, cons, &mut best),
        }
    }
    best.cand
}

/// Builds the node histogram from raw rows and searches it.
pub fn find_best_split_for_rows(
    binned: &BinnedMatrix,
    rows: &[u32],
    grad: &[f64],
    hess: &[f64],
    cons: SplitConstraints,
) -> Option<SplitCandidate> {
    if (rows.len() as u32) < 2 * cons.min_data_in_leaf {
        return None;
    }
    let hist = Histogram::build(binned, rows, grad, hess);
    let total = rows.iter().fold(NodeStats::default(), |acc, &r| {
        acc + NodeStats {
            g: grad[r as usize],
            h: hess[r as usize],
            n: 1,
        }
    });
    find_best_split(&hist, total, binned, cons)
}

#[inline]
fn admissible(left: NodeStats, right: NodeStats, cons: SplitConstraints) -> bool {
    left.n >= cons.min_data_in_leaf && right.n >= cons.min_data_in_leaf
}

fn scan_numeric(
    feature: usize,
    mapper: &BinMapper,
    fh: &[NodeStats],
    total: NodeStats,
    parent: f64,
    cons: SplitConstraints,
    best: &mut Best,
) {
    let nb = fh.len() - 1;
    let missing = fh[nb];
    let lambda = cons.lambda_l2;
    let mut acc = NodeStats::default();
    for (b, &h) in fh[..nb].iter().enumerate() {
        // an empty bin repeats the previous candidate, which cannot win a tie
        if h.n == 0 {
            continue;
        }
        acc += h;
        if total.n - acc.n < cons.min_data_in_leaf {
            break;
        }
        // missing values to the right
        if acc.n >= cons.min_data_in_leaf && (b + 1 < nb || missing.n > 0) {
            let right = total - acc;
            if let Some(gain) = best.improved_gain(acc, right, parent, lambda) {
                let default_left = if missing.n > 0 { false } else { acc.n >= right.n };
                best.gain = gain;
                best.cand = Some(numeric_candidate(feature, mapper, b, default_left, gain, acc, right));
            }
        }
        if missing.n > 0 && b + 1 < nb {
            let left = acc + missing;
            let right = total - left;
            if admissible(left, right, cons) {
                if let Some(gain) = best.improved_gain(left, right, parent, lambda) {
                    best.gain = gain;
                    best.cand = Some(numeric_candidate(feature, mapper, b, true, gain, left, right));
                }
            }
        }
    }
}

fn numeric_candidate(
    feature: usize,
    mapper: &BinMapper,
    b: usize,
    default_left: bool,
    gain: f64,
    left: NodeStats,
    right: NodeStats,
) -> SplitCandidate {
    SplitCandidate {
        feature,
        rule: SplitRule::Numeric {
            bin: b as u16,
            threshold: mapper.threshold(b as u16),
        },
        default_left,
        gain,
        left,
        right,
    }
}

/// Many-vs-many categorical search: categories sorted by G/H, then every
/// prefix of that order is tried as the left set.
fn scan_categorical(
    feature: usize,
    fh: &[NodeStats],
    total: NodeStats,
    parent: f64,
    cons: SplitConstraints,
    best: &mut Best,
) {
    let nb = fh.len() - 1;
    let missing = fh[nb];
    let lambda = cons.lambda_l2;
    let mut order: Vec<u32> = (0..nb as u32).filter(|&c| fh[c as usize].n > 0).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&fh[a as usize], &fh[b as usize]);
        (sa.g / sa.h).total_cmp(&(sb.g / sb.h)).then(a.cmp(&b))
    });
    let m = order.len();
    let mut acc = NodeStats::default();
    for k in 1..=m {
        acc += fh[order[k - 1] as usize];
        let consider = |left: NodeStats, default_left: bool, best: &mut Best| {
            let right = total - left;
            if !admissible(left, right, cons) {
                return;
            }
            if let Some(gain) = best.improved_gain(left, right, parent, lambda) {
                let mut categories = order[..k].to_vec();
                categories.sort_unstable();
                let default_left = if missing.n > 0 { default_left } else { left.n >= right.n };
                best.gain = gain;
                best.cand = Some(SplitCandidate {
                    feature,
                    rule: SplitRule::Categorical { categories },
                    default_left,
                    gain,
                    left,
                    right,
                });
            }
        };
        if k < m || missing.n > 0 {
            consider(acc, false, best);
        }
        if missing.n > 0 && k < m {
            consider(acc + missing, true, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::data::{FeatureKind, FeatureMatrix};

    fn cons(min: u32) -> SplitConstraints {
        SplitConstraints {
            min_data_in_leaf: min,
            lambda_l2: 0.0,
        }
    }

    fn l2_grads(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        (y.iter().map(|v| mean - v).collect(), vec![1.0; y.len()])
    }

    fn all_rows(n: usize) -> Vec<u32> {
        (0..n as u32).collect()
    }

    #[test]
    fn constant_target_has_no_split() {
        let x = FeatureMatrix::from_rows(&(0..100).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let b = BinnedMatrix::fit(&x, 255);
        let (g, h) = l2_grads(&[1.7; 100]);
        assert!(find_best_split_for_rows(&b, &all_rows(100), &g, &h, cons(1)).is_none());
    }

    #[test]
    fn step_target_splits_at_step() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![(i as f64 + 0.5) / 100.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| if r[0] < 0.5 { 0.0 } else { 1.0 }).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let b = BinnedMatrix::fit(&x, 255);
        let (g, h) = l2_grads(&y);
        let s = find_best_split_for_rows(&b, &all_rows(100), &g, &h, cons(20)).unwrap();
        let SplitRule::Numeric { threshold, .. } = s.rule else {
            panic!()
        };
        assert!((threshold - 0.5).abs() < 1e-12);
        assert_eq!((s.left.n, s.right.n), (50, 50));
    }

    #[test]
    fn pigeonhole_forces_leaf() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let b = BinnedMatrix::fit(&x, 255);
        let (g, h) = l2_grads(&y);
        assert!(find_best_split_for_rows(&b, &all_rows(30), &g, &h, cons(20)).is_none());
    }

    #[test]
    fn missing_values_pick_gainful_side() {
        // x missing on high-target rows: they belong with x > 5
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            rows.push(vec![i as f64 % 10.0]);
            y.push(if i % 10 > 5 { 3.0 } else { 0.0 });
        }
        for _ in 0..10 {
            rows.push(vec![f64::NAN]);
            y.push(3.0);
        }
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let b = BinnedMatrix::fit(&x, 255);
        let (g, h) = l2_grads(&y);
        let s = find_best_split_for_rows(&b, &all_rows(50), &g, &h, cons(5)).unwrap();
        assert!(!s.default_left);
        assert_eq!(s.right.n, 26);
    }

    #[test]
    fn categorical_groups_by_gradient_ratio() {
        // categories 0 and 2 share a high target, 1 and 3 a low one
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..80 {
            let c = (i % 4) as f64;
            rows.push(c);
            y.push(if i % 2 == 0 { 2.0 } else { -1.0 });
        }
        let x = FeatureMatrix::new(
            vec!["c".into()],
            vec![FeatureKind::Categorical { n_categories: 4 }],
            vec![rows],
        )
        .unwrap();
        let b = BinnedMatrix::fit(&x, 255);
        let (g, h) = l2_grads(&y);
        let s = find_best_split_for_rows(&b, &all_rows(80), &g, &h, cons(5)).unwrap();
        let SplitRule::Categorical { categories } = &s.rule else {
            panic!()
        };
        // high-target categories have negative gradients and sort first
        assert_eq!(categories, &vec![0, 2]);
    }

    #[test]
    fn subtraction_matches_direct_build() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![(i % 9) as f64, (i * 7 % 13) as f64]).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let b = BinnedMatrix::fit(&x, 255);
        let g: Vec<f64> = (0..64).map(|i| (i as f64).sin()).collect();
        let h = vec![1.0; 64];
        let all = all_rows(64);
        let (left, right): (Vec<u32>, Vec<u32>) = all.iter().partition(|&&r| r % 3 == 0);
        let mut parent = Histogram::build(&b, &all, &g, &h);
        parent.subtract(&Histogram::build(&b, &left, &g, &h));
        let direct = Histogram::build(&b, &right, &g, &h);
        for (a, d) in parent.bins.iter().zip(&direct.bins) {
            assert_eq!(a.n, d.n);
            assert!((a.g - d.g).abs() < 1e-12);
        }
    }
}
