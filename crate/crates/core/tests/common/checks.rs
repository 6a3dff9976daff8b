//! Oracle comparisons at a configurable scale. Each check returns a short
//! summary on success and a description of the first disagreement otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sa_core::eval::{mae, pearson, rmse, spearman};
use sa_core::explain::tree_shap;
use sa_core::gaze::{detect_in_samples, DurationRule, IdtParams};
use sa_core::gbdt::split::MIN_SPLIT_GAIN;
use sa_core::gbdt::{
    find_best_split_for_rows, train_detailed, BinnedMatrix, Ensemble, FeatureKind, FeatureMatrix, SplitConstraints,
    SplitRule, TrainParams,
};
use sa_core::physio::{rmssd, RmssdMode};

use super::*;

pub type Check = std::result::Result<String, String>;

fn single_tree_ensemble(tree: Tree, m: usize) -> Ensemble {
    Ensemble {
        base_score: 0.0,
        learning_rate: 1.0,
        feature_names: (0..m).map(|j| format!("f{j}")).collect(),
        feature_kinds: vec![FeatureKind::Numeric; m],
        trees: vec![tree],
    }
}

/// TreeSHAP against coalition enumeration on random trees.
pub fn shap_vs_enumeration(n_trees: usize, rows_per_tree: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for t in 0..n_trees {
        let m = rng.random_range(1..=4);
        let depth = rng.random_range(1..=3);
        let tree = random_tree(&mut rng, m, depth);
        let e = single_tree_ensemble(tree.clone(), m);
        for _ in 0..rows_per_tree {
            let row = random_row(&mut rng, m);
            let fast = tree_shap(&e, &row).map_err(|e| e.to_string())?;
            let slow = brute_force_shap(&tree, &row, m);
            for (j, (f, s)) in fast.phi.iter().zip(&slow).enumerate() {
                let d = (f - s).abs();
                worst = worst.max(d);
                if d > 1e-9 {
                    return Err(format!("tree {t} feature {j}: {f} vs {s}"));
                }
            }
        }
    }
    Ok(format!("{n_trees} trees, max |diff| {worst:.1e}"))
}

fn random_split_data(rng: &mut impl Rng) -> (Vec<Vec<f64>>, Vec<f64>, usize) {
    let n = rng.random_range(2..=200);
    let m = rng.random_range(1..=3);
    let columns = (0..m)
        .map(|_| {
            // some features have few distinct values, so rows share bins
            let levels = if rng.random_bool(0.3) {
                Some(rng.random_range(2..8))
            } else {
                None
            };
            (0..n)
                .map(|_| match levels {
                    Some(l) => rng.random_range(0..l) as f64,
                    None => rng.random_range(-10.0..10.0),
                })
                .collect()
        })
        .collect();
    let grad = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let min_data = rng.random_range(1..=20);
    (columns, grad, min_data)
}

/// Histogram split search against exhaustive search on raw values.
pub fn split_vs_exhaustive(n_datasets: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = 0;
    for d in 0..n_datasets {
        let (columns, grad, min_data) = random_split_data(&mut rng);
        let n = grad.len();
        let names = (0..columns.len()).map(|j| format!("f{j}")).collect();
        let x = FeatureMatrix::new(names, vec![FeatureKind::Numeric; columns.len()], columns.clone())
            .map_err(|e| e.to_string())?;
        let binned = BinnedMatrix::fit(&x, 255);
        let rows: Vec<u32> = (0..n as u32).collect();
        let hess = vec![1.0; n];
        let cons = SplitConstraints {
            min_data_in_leaf: min_data as u32,
            lambda_l2: 0.0,
        };
        let got = find_best_split_for_rows(&binned, &rows, &grad, &hess, cons);
        let want = exhaustive_split(&columns, &grad, min_data, MIN_SPLIT_GAIN);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) => {
                let SplitRule::Numeric { threshold, .. } = g.rule else {
                    return Err(format!("dataset {d}: categorical rule on numeric data"));
                };
                let left: Vec<bool> = columns[g.feature].iter().map(|&v| v <= threshold).collect();
                if g.feature != w.feature || left != w.left {
                    return Err(format!(
                        "dataset {d}: feature {} gain {} vs oracle feature {} gain {}",
                        g.feature,
                        split_gain(&grad, &left),
                        w.feature,
                        w.gain
                    ));
                }
                if (g.gain - w.gain).abs() > 1e-9 * w.gain.abs().max(1.0) {
                    return Err(format!("dataset {d}: gain {} vs {}", g.gain, w.gain));
                }
                found += 1;
            }
            (g, w) => {
                return Err(format!(
                    "dataset {d}: split found {} vs oracle {}",
                    g.is_some(),
                    w.is_some()
                ))
            }
        }
    }
    Ok(format!("{n_datasets} datasets, {found} with a split, all identical"))
}

/// Training RMSE never increases from one round to the next.
pub fn loss_non_increasing(rounds: usize, seeds: std::ops::Range<u64>) -> Check {
    for seed in seeds.clone() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 400;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 3.0 * r[0] - 2.0 * (r[1] > 0.5) as u8 as f64 + r[2] * r[3] + rng.random_range(-0.5..0.5))
            .collect();
        let x = FeatureMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let params = TrainParams {
            max_rounds: rounds,
            seed,
            ..TrainParams::default()
        };
        let out = train_detailed(&x, &y, &params, None).map_err(|e| e.to_string())?;
        let h = &out.history.train_rmse;
        if h.len() != rounds {
            return Err(format!("seed {seed}: stopped after {} rounds", h.len()));
        }
        if let Some(i) = (1..h.len()).find(|&i| h[i] > h[i - 1]) {
            return Err(format!("seed {seed}: rmse rose at round {i}: {} -> {}", h[i - 1], h[i]));
        }
    }
    Ok(format!("{} seeds x {rounds} rounds", seeds.end - seeds.start))
}

/// RMSSD in both modes against the term-by-term formula, plus the
/// `1/sqrt(N-1)` relation between them.
pub fn rmssd_vs_formula(n_windows: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for w in 0..n_windows {
        let len = rng.random_range(0..60);
        let rr: Vec<f64> = (0..len).map(|_| rng.random_range(300.0..1500.0)).collect();
        let std = rmssd(&rr, RmssdMode::Standard);
        let lit = rmssd(&rr, RmssdMode::RootSumSquares);
        let (ds, dl) = (rmssd_direct(&rr, true), rmssd_direct(&rr, false));
        match (std, lit, ds, dl) {
            (None, None, None, None) => {}
            (Some(a), Some(b), Some(c), Some(d)) => {
                if (a - c).abs() > 1e-12 || (b - d).abs() > 1e-12 {
                    return Err(format!("window {w}: ({a}, {b}) vs ({c}, {d})"));
                }
                let scaled = b / ((len - 1) as f64).sqrt();
                if (a - scaled).abs() > 1e-12 * a.max(1.0) {
                    return Err(format!("window {w}: standard {a} vs literal/sqrt(N-1) {scaled}"));
                }
            }
            other => return Err(format!("window {w} (N = {len}): {other:?}")),
        }
    }
    Ok(format!("{n_windows} windows, both modes"))
}

/// Incremental I-DT against the from-scratch reference.
pub fn idt_vs_reference(n_traces: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0;
    for k in 0..n_traces {
        let period = if rng.random_bool(0.5) { 5.0 } else { 1000.0 / 60.0 };
        let segments = rng.random_range(1..25);
        let trace = random_gaze_trace(&mut rng, period, segments);
        let params = IdtParams {
            max_dispersion_deg: rng.random_range(0.3..2.0),
            duration_ms: rng.random_range(0.0..300.0),
            duration_rule: DurationRule::Minimum,
        };
        let got = detect_in_samples(&trace, &params);
        let want = idt_reference(&trace, params.max_dispersion_deg, params.duration_ms);
        if got.len() != want.len() {
            return Err(format!(
                "trace {k}: {} fixations vs reference {}",
                got.len(),
                want.len()
            ));
        }
        let tol = 1.2 * period;
        for (f, &(i, j)) in got.iter().zip(&want) {
            if (f.start_ms - trace[i].t_ms).abs() > tol || (f.end_ms - trace[j].t_ms).abs() > tol {
                return Err(format!(
                    "trace {k}: fixation [{}, {}] vs reference [{}, {}]",
                    f.start_ms, f.end_ms, trace[i].t_ms, trace[j].t_ms
                ));
            }
        }
        total += want.len();
    }
    Ok(format!("{n_traces} traces, {total} fixations matched"))
}

/// Metrics against direct summation on random vectors.
pub fn metrics_vs_naive(n_vectors: usize, max_len: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in 0..n_vectors {
        let n = if v == 0 { max_len } else { rng.random_range(3..=max_len) };
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64).collect();
        let yhat: Vec<f64> = y.iter().map(|t| t + rng.random_range(-1.5..1.5)).collect();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        if !close(rmse(&y, &yhat), naive_rmse(&y, &yhat)) || !close(mae(&y, &yhat), naive_mae(&y, &yhat)) {
            return Err(format!("vector {v}: rmse/mae disagree"));
        }
        let p = pearson(&y, &yhat).ok_or("pearson undefined")?;
        if !close(p, naive_pearson(&y, &yhat)) {
            return Err(format!("vector {v}: pearson {p} vs {}", naive_pearson(&y, &yhat)));
        }
        // labels carry heavy ties; predictions are tie-free
        let s = spearman(&y, &yhat).ok_or("spearman undefined")?;
        if !close(s, naive_spearman(&y, &yhat)) {
            return Err(format!("vector {v}: spearman {s} vs {}", naive_spearman(&y, &yhat)));
        }
        let x2: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s2 = spearman(&x2, &yhat).ok_or("spearman undefined")?;
        if !close(s2, spearman_no_ties(&x2, &yhat)) {
            return Err(format!(
                "vector {v}: tie-free spearman {s2} vs {}",
                spearman_no_ties(&x2, &yhat)
            ));
        }
    }
    let hand = spearman(&[1.0, 3.0, 2.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).ok_or("spearman undefined")?;
    if hand != 0.8 {
        return Err(format!("spearman([1,3,2,4], [1,2,3,4]) = {hand}, expected 0.8"));
    }
    Ok(format!(
        "{n_vectors} vectors up to n = {max_len}; hand example exactly 0.8"
    ))
}
