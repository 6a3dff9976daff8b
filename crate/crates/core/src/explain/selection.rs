//! Incremental feature selection along an importance ranking.

use serde::{Deserialize, Serialize};

use super::ranking::ImportanceRanking;
use crate::error::{Error, Result};
use crate::eval::{kfold_cv, CvConfig, CvReport};
use crate::gbdt::{FeatureMatrix, TrainParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionPoint {
    pub k: usize,
    pub rmse: f64,
    pub mae: f64,
    pub corr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub curve: Vec<SelectionPoint>,
    pub k_star: usize,
    pub features: Vec<String>,
    /// Cross-validation of the selected subset.
    pub report: CvReport,
}

/// `k` with the lowest RMSE, the smaller `k` on ties.
pub fn select_k(curve: &[SelectionPoint]) -> Option<usize> {
    curve
        .iter()
        .fold(None::<&SelectionPoint>, |best, p| match best {
            Some(b) if b.rmse < p.rmse || (b.rmse == p.rmse && b.k <= p.k) => Some(b),
            _ => Some(p),
        })
        .map(|p| p.k)
}

/// Columns of `x` holding the first `k` ranked features, in dataset order,
/// so the full ranking selects `x` unchanged.
pub fn top_k_columns(x: &FeatureMatrix, ranking: &ImportanceRanking, k: usize) -> Result<Vec<usize>> {
    let mut cols = ranking
        .top(k)
        .iter()
        .map(|name| {
            x.names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Schema(format!("ranked feature `{name}` not in the dataset")))
        })
        .collect::<Result<Vec<_>>>()?;
    cols.sort_unstable();
    Ok(cols)
}

fn same_run(r: &CvReport, x: &FeatureMatrix, params: &TrainParams, cv: &CvConfig) -> bool {
    r.k == cv.k
        && r.seed == cv.seed
        && r.grouped == cv.grouped
        && r.n_rows == x.n_rows()
        && r.features == x.names()
        && r.params == *params
}

/// Cross-validates the top-`k` features for every `k` in `ks` and selects
/// the `k` with minimum pooled RMSE. `known` holds reports already computed
/// with the same inputs; one whose subset, folds and parameters match is used
/// instead of rerunning that `k`.
#[allow(clippy::too_many_arguments)]
pub fn incremental_selection(
    x: &FeatureMatrix,
    y: &[f64],
    groups: Option<&[&str]>,
    ranking: &ImportanceRanking,
    params: &TrainParams,
    cv: &CvConfig,
    ks: std::ops::RangeInclusive<usize>,
    known: &[&CvReport],
) -> Result<SelectionResult> {
    if ranking.entries.len() != x.n_features() {
        return Err(Error::Schema(format!(
            "ranking has {} features, dataset {}",
            ranking.entries.len(),
            x.n_features()
        )));
    }
    let ks: Vec<usize> = ks.filter(|&k| k >= 1 && k <= x.n_features()).collect();
    if ks.is_empty() {
        return Err(Error::InvalidParam("empty k range".into()));
    }
    let mut reports = Vec::with_capacity(ks.len());
    for &k in &ks {
        let sub = x.select_columns(&top_k_columns(x, ranking, k)?);
        let report = match known.iter().find(|r| same_run(r, &sub, params, cv)) {
            Some(r) => (*r).clone(),
            None => kfold_cv(&sub, y, groups, params, cv)?.report,
        };
        log::info!("k = {k}: pooled RMSE {:.4}", report.pooled.rmse);
        reports.push(report);
    }
    let curve: Vec<SelectionPoint> = ks
        .iter()
        .zip(&reports)
        .map(|(&k, r)| SelectionPoint {
            k,
            rmse: r.pooled.rmse,
            mae: r.pooled.mae,
            corr: r.pooled.corr,
        })
        .collect();
    let k_star = select_k(&curve).unwrap();
    let report = reports.swap_remove(ks.iter().position(|&k| k == k_star).unwrap());
    Ok(SelectionResult {
        features: report.features.clone(),
        curve,
        k_star,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(rmse: &[f64]) -> Vec<SelectionPoint> {
        rmse.iter()
            .enumerate()
            .map(|(i, &r)| SelectionPoint {
                k: i + 1,
                rmse: r,
                mae: r,
                corr: None,
            })
            .collect()
    }

    #[test]
    fn unique_minimum() {
        let mut r: Vec<f64> = (1..=21).map(|k| ((k as f64) - 12.0).powi(2) + 1.0).collect();
        r[11] = 0.5;
        assert_eq!(select_k(&curve(&r)), Some(12));
    }

    #[test]
    fn monotone_curve_picks_all() {
        let r: Vec<f64> = (1..=21).map(|k| 2.0 - k as f64 * 0.01).collect();
        assert_eq!(select_k(&curve(&r)), Some(21));
    }

    #[test]
    fn ties_prefer_smaller_k() {
        assert_eq!(select_k(&curve(&[1.0, 0.5, 0.5, 0.7])), Some(2));
    }
}
