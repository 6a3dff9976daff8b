//! Per-feature effect summaries: attribution quartiles over value bins and
//! the rank correlation between feature value and attribution.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::spearman_test;
use crate::error::{Error, Result};
use crate::explain::ShapMatrix;
use crate::gbdt::{FeatureKind, FeatureMatrix};

/// Default upper limit on value segments per feature.
pub const MAX_EFFECT_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectBin {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub phi_mean: f64,
    pub phi_q1: f64,
    pub phi_median: f64,
    pub phi_q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEffect {
    pub feature: String,
    /// Rows with a value for the feature.
    pub n: usize,
    pub n_missing: usize,
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub bins: Vec<EffectBin>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Groups `(value, phi)` pairs sorted by value into at most `max_bins`
/// quantile segments; equal values always share a segment.
fn segment(pairs: &[(f64, f64)], max_bins: usize) -> Vec<std::ops::Range<usize>> {
    let n = pairs.len();
    let mut ranges: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 == pairs[start].0 {
            end += 1;
        }
        let id = start * max_bins / n;
        match ranges.last_mut() {
            Some((last_id, r)) if *last_id == id => r.end = end,
            _ => ranges.push((id, start..end)),
        }
        start = end;
    }
    ranges.into_iter().map(|(_, r)| r).collect()
}

fn summarize(pairs: &[(f64, f64)]) -> EffectBin {
    let mut phi: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    phi.sort_by(f64::total_cmp);
    EffectBin {
        lo: pairs[0].0,
        hi: pairs[pairs.len() - 1].0,
        n: pairs.len(),
        phi_mean: phi.iter().sum::<f64>() / phi.len() as f64,
        phi_q1: quantile_sorted(&phi, 0.25),
        phi_median: quantile_sorted(&phi, 0.5),
        phi_q3: quantile_sorted(&phi, 0.75),
    }
}

/// Effect summary of every feature in `shap`. `x` holds the raw feature
/// values; row `shap.row_ids[i]` of `x` is the row explained by
/// `shap.values[i]`.
pub fn feature_effect_report(shap: &ShapMatrix, x: &FeatureMatrix, max_bins: usize) -> Result<Vec<FeatureEffect>> {
    if max_bins == 0 {
        return Err(Error::InvalidParam("max_bins must be positive".into()));
    }
    let mut out = Vec::with_capacity(shap.feature_names.len());
    for (j, name) in shap.feature_names.iter().enumerate() {
        let col = x
            .names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("feature `{name}` missing from dataset")))?;
        let mut pairs = Vec::with_capacity(shap.n_rows());
        let mut n_missing = 0;
        for (i, &r) in shap.row_ids.iter().enumerate() {
            if r >= x.n_rows() {
                return Err(Error::Schema(format!("SHAP row id {r} outside dataset")));
            }
            let v = x.value(r, col);
            if v.is_nan() {
                n_missing += 1;
            } else {
                pairs.push((v, shap.values[i][j]));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let limit = match x.kinds()[col] {
            FeatureKind::Categorical { n_categories } => n_categories as usize,
            FeatureKind::Numeric => max_bins,
        };
        let bins = segment(&pairs, limit.max(1))
            .into_iter()
            .map(|r| summarize(&pairs[r]))
            .collect();
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let phis: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let test = spearman_test(&values, &phis);
        out.push(FeatureEffect {
            feature: name.clone(),
            n: pairs.len(),
            n_missing,
            rho: test.map(|t| t.rho),
            p_value: test.and_then(|t| t.p_value),
            bins,
        });
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `bin,lo,hi,n,phi_mean,phi_q1,phi_median,phi_q3` rows of one feature.
pub fn effect_bins_csv(e: &FeatureEffect) -> String {
    let mut s = String::from("bin,lo,hi,n,phi_mean,phi_q1,phi_median,phi_q3\n");
    for (i, b) in e.bins.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{}",
            b.lo, b.hi, b.n, b.phi_mean, b.phi_q1, b.phi_median, b.phi_q3
        );
    }
    s
}

/// `feature,n,n_missing,rho,p_value` for every feature.
pub fn effects_summary_csv(effects: &[FeatureEffect]) -> String {
    let mut s = String::from("feature,n,n_missing,rho,p_value\n");
    for e in effects {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            e.feature,
            e.n,
            e.n_missing,
            opt(e.rho),
            opt(e.p_value)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(values: Vec<f64>, phi: Vec<f64>) -> (ShapMatrix, FeatureMatrix) {
        let n = values.len();
        let x = FeatureMatrix::from_rows(&values.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap();
        let shap = ShapMatrix {
            feature_names: vec!["f0".into()],
            row_ids: (0..n).collect(),
            base: vec![0.0; n],
            values: phi.into_iter().map(|p| vec![p]).collect(),
        };
        (shap, x)
    }

    #[test]
    fn dummy_feature() {
        let (s, x) = setup((0..50).map(|i| i as f64).collect(), vec![0.0; 50]);
        let e = &feature_effect_report(&s, &x, 20).unwrap()[0];
        assert_eq!(e.rho, None);
        assert_eq!(e.bins.len(), 20);
        assert!(e.bins.iter().all(|b| b.phi_q1 == 0.0 && b.phi_q3 == 0.0));
    }

    #[test]
    fn constant_feature() {
        let (s, x) = setup(vec![2.0; 30], (0..30).map(|i| i as f64).collect());
        let e = &feature_effect_report(&s, &x, 20).unwrap()[0];
        assert_eq!(e.bins.len(), 1);
        assert_eq!(e.rho, None);
    }

    #[test]
    fn monotone_effect() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let (s, x) = setup(v.clone(), v.iter().map(|x| -(x * 0.01).powi(3)).collect());
        let e = &feature_effect_report(&s, &x, 20).unwrap()[0];
        assert_eq!(e.rho, Some(-1.0));
        assert_eq!(e.bins.iter().map(|b| b.n).sum::<usize>(), 100);
        assert!(e.bins.windows(2).all(|w| w[0].phi_median > w[1].phi_median));
    }

    #[test]
    fn quartiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.25), 2.0);
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&[1.0, 2.0], 0.5), 1.5);
    }
}
