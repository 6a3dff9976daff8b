//! Seeded k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, Metrics};
use crate::error::{Error, Result};
use crate::gbdt::{train_detailed, Ensemble, FeatureMatrix, TrainParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    /// Keep all rows of a participant in the same fold.
    pub grouped: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 10,
            seed: 0,
            grouped: false,
        }
    }
}

/// Sizes of `k` contiguous chunks of `n` items; the first `n % k` chunks get
/// one extra item.
fn chunk_sizes(n: usize, k: usize) -> impl Iterator<Item = usize> {
    (0..k).map(move |f| n / k + usize::from(f < n % k))
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Fold id of every row: a seeded shuffle of `0..n` cut into contiguous
/// chunks of size `floor(n/k)` or `ceil(n/k)`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("k = {k}; cross-validation needs k >= 2")));
    }
    if n < k {
        return Err(Error::InsufficientData(format!("{n} rows cannot fill {k} folds")));
    }
    let order = shuffled(n, seed);
    let mut fold = vec![0; n];
    let mut pos = 0;
    for (f, size) in chunk_sizes(n, k).enumerate() {
        for &r in &order[pos..pos + size] {
            fold[r] = f;
        }
        pos += size;
    }
    Ok(fold)
}

/// Fold id of every row with whole groups assigned to folds: the sorted
/// distinct groups are shuffled and cut into chunks as in
/// [`fold_assignment`].
pub fn grouped_fold_assignment(groups: &[&str], k: usize, seed: u64) -> Result<Vec<usize>> {
    let mut distinct: Vec<&str> = groups.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let group_fold = fold_assignment(distinct.len(), k, seed)?;
    Ok(groups
        .iter()
        .map(|g| group_fold[distinct.binary_search(g).unwrap()])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub best_iteration: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofPrediction {
    pub row: usize,
    pub fold: usize,
    pub y: f64,
    pub yhat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub grouped: bool,
    pub n_rows: usize,
    pub features: Vec<String>,
    pub params: TrainParams,
    pub folds: Vec<FoldReport>,
    /// Metrics over the concatenated out-of-fold predictions.
    pub pooled: Metrics,
    /// Out-of-fold prediction of every row, in row order.
    pub oof: Vec<OofPrediction>,
}

impl CvReport {
    /// Median of the per-fold best iterations (lower median), at least 1.
    pub fn median_best_iteration(&self) -> usize {
        let mut its: Vec<usize> = self.folds.iter().map(|f| f.best_iteration).collect();
        its.sort_unstable();
        its.get((its.len().max(1) - 1) / 2).copied().unwrap_or(1).max(1)
    }

    pub fn oof_predictions(&self) -> Vec<f64> {
        self.oof.iter().map(|o| o.yhat).collect()
    }
}

/// A finished cross-validation: the report plus each fold's model and test
/// rows.
#[derive(Debug, Clone)]
pub struct CvRun {
    pub report: CvReport,
    pub models: Vec<Ensemble>,
    pub test_rows: Vec<Vec<usize>>,
}

/// Trains one model per fold on the other folds, with the held-out fold as
/// the early-stopping set, and scores its predictions on that fold. Folds
/// run in parallel; results are assembled in fold order.
pub fn kfold_cv(
    x: &FeatureMatrix,
    y: &[f64],
    groups: Option<&[&str]>,
    params: &TrainParams,
    cfg: &CvConfig,
) -> Result<CvRun> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::Schema(format!("{} labels for {n} rows", y.len())));
    }
    let fold_of = match (cfg.grouped, groups) {
        (true, Some(g)) => grouped_fold_assignment(g, cfg.k, cfg.seed)?,
        (true, None) => return Err(Error::InvalidParam("grouped folds need participant ids".into())),
        (false, _) => fold_assignment(n, cfg.k, cfg.seed)?,
    };
    let test_rows: Vec<Vec<usize>> = (0..cfg.k)
        .map(|f| (0..n).filter(|&r| fold_of[r] == f).collect())
        .collect();

    let results = (0..cfg.k)
        .into_par_iter()
        .map(|f| {
            let test = &test_rows[f];
            let train: Vec<usize> = (0..n).filter(|&r| fold_of[r] != f).collect();
            let (tx, ty) = (x.select_rows(&train), pick(y, &train));
            let (vx, vy) = (x.select_rows(test), pick(y, test));
            let out = train_detailed(&tx, &ty, params, Some((&vx, &vy)))?;
            let yhat = out.ensemble.predict_matrix(&vx)?;
            let report = FoldReport {
                fold: f,
                n_train: train.len(),
                n_test: test.len(),
                best_iteration: out.history.best_iteration,
                metrics: metrics(&vy, &yhat)?,
            };
            Ok((report, out.ensemble, yhat))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut oof = vec![
        OofPrediction {
            row: 0,
            fold: 0,
            y: 0.0,
            yhat: 0.0
        };
        n
    ];
    let mut folds = Vec::with_capacity(cfg.k);
    let mut models = Vec::with_capacity(cfg.k);
    for ((report, model, yhat), rows) in results.into_iter().zip(&test_rows) {
        for (&r, &p) in rows.iter().zip(&yhat) {
            oof[r] = OofPrediction {
                row: r,
                fold: report.fold,
                y: y[r],
                yhat: p,
            };
        }
        folds.push(report);
        models.push(model);
    }
    let pooled = metrics(y, &oof.iter().map(|o| o.yhat).collect::<Vec<_>>())?;
    Ok(CvRun {
        report: CvReport {
            k: cfg.k,
            seed: cfg.seed,
            grouped: cfg.grouped,
            n_rows: n,
            features: x.names().to_vec(),
            params: params.clone(),
            folds,
            pooled,
            oof,
        },
        models,
        test_rows,
    })
}

pub(crate) fn pick(v: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&r| v[r]).collect()
}

/// Model on all rows with the round count fixed to the CV median best
/// iteration, since no held-out set remains for early stopping.
pub fn fit_final(x: &FeatureMatrix, y: &[f64], params: &TrainParams, report: &CvReport) -> Result<Ensemble> {
    let fixed = TrainParams {
        max_rounds: report.median_best_iteration(),
        ..params.clone()
    };
    crate::gbdt::train(x, y, &fixed, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_folds() {
        let mut f = fold_assignment(10, 10, 3).unwrap();
        f.sort_unstable();
        assert_eq!(f, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn study_sized_folds() {
        let f = fold_assignment(1634, 10, 0).unwrap();
        let sizes: Vec<usize> = (0..10).map(|k| f.iter().filter(|&&x| x == k).count()).collect();
        assert_eq!(sizes, vec![164, 164, 164, 164, 163, 163, 163, 163, 163, 163]);
    }

    #[test]
    fn too_few_rows() {
        assert!(fold_assignment(9, 10, 0).is_err());
    }

    #[test]
    fn groups_stay_together() {
        let groups: Vec<String> = (0..60).map(|i| format!("P{:02}", i % 12)).collect();
        let refs: Vec<&str> = groups.iter().map(String::as_str).collect();
        let f = grouped_fold_assignment(&refs, 4, 1).unwrap();
        for i in 0..60 {
            for j in 0..60 {
                if refs[i] == refs[j] {
                    assert_eq!(f[i], f[j]);
                }
            }
        }
        let used: std::collections::BTreeSet<usize> = f.iter().copied().collect();
        assert_eq!(used.len(), 4);
    }

    #[test]
    fn median_iteration() {
        let mut r = CvReport {
            k: 3,
            seed: 0,
            grouped: false,
            n_rows: 0,
            features: vec![],
            params: TrainParams::default(),
            folds: vec![],
            pooled: Metrics {
                n: 0,
                rmse: 0.0,
                mae: 0.0,
                corr: None,
            },
            oof: vec![],
        };
        for (i, b) in [40, 10, 25, 90].into_iter().enumerate() {
            r.folds.push(FoldReport {
                fold: i,
                n_train: 1,
                n_test: 1,
                best_iteration: b,
                metrics: r.pooled,
            });
        }
        assert_eq!(r.median_best_iteration(), 25);
    }
}
