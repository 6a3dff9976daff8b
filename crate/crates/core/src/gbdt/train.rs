//! Leaf-wise boosting with L2 loss.

use super::binning::BinnedMatrix;
use super::data::FeatureMatrix;
use super::goss::goss_sample;
use super::params::TrainParams;
use super::split::{find_best_split, Histogram, NodeStats, SplitCandidate, SplitConstraints, SplitRule};
use super::tree::{Ensemble, Node, Tree};
use crate::error::{Error, Result};
use crate::seeds::derive_seed;

/// Per-round training trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    /// Training RMSE after each round.
    pub train_rmse: Vec<f64>,
    /// Validation RMSE after each round, when a validation set was given.
    pub valid_rmse: Vec<f64>,
    /// Number of trees kept in the returned ensemble.
    pub best_iteration: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub ensemble: Ensemble,
    pub history: TrainHistory,
}

/// Trains with default reporting; see [`train_detailed`].
pub fn train(
    x: &FeatureMatrix,
    y: &[f64],
    params: &TrainParams,
    valid: Option<(&FeatureMatrix, &[f64])>,
) -> Result<Ensemble> {
    train_detailed(x, y, params, valid).map(|o| o.ensemble)
}

/// Mean computed as an offset from the first value, exact for constant input.
fn stable_mean(y: &[f64]) -> f64 {
    let first = y[0];
    first + y.iter().map(|v| v - first).sum::<f64>() / y.len() as f64
}

fn rmse(pred: &[f64], y: &[f64]) -> f64 {
    (pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64).sqrt()
}

pub fn train_detailed(
    x: &FeatureMatrix,
    y: &[f64],
    params: &TrainParams,
    valid: Option<(&FeatureMatrix, &[f64])>,
) -> Result<TrainOutput> {
    params.validate()?;
    let n = x.n_rows();
    if n == 0 {
        return Err(Error::InsufficientData("training set is empty".into()));
    }
    if y.len() != n {
        return Err(Error::Schema(format!("{} labels for {n} rows", y.len())));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParam(format!("non-finite label {v}")));
    }
    if let Some((vx, vy)) = valid {
        if vx.names() != x.names() || vx.kinds() != x.kinds() {
            return Err(Error::Schema(
                "validation features differ from training features".into(),
            ));
        }
        if vy.len() != vx.n_rows() {
            return Err(Error::Schema("validation labels misaligned".into()));
        }
    }

    let binned = BinnedMatrix::fit(x, params.max_bin);
    let base = stable_mean(y);
    let mut ensemble = Ensemble {
        base_score: base,
        learning_rate: params.learning_rate,
        feature_names: x.names().to_vec(),
        feature_kinds: x.kinds().to_vec(),
        trees: Vec::new(),
    };
    let mut pred = vec![base; n];
    let mut valid_pred = valid.map(|(vx, _)| vec![base; vx.n_rows()]);
    let mut history = TrainHistory::default();
    let mut best = (f64::INFINITY, 0usize);
    let mut grad = vec![0.0; n];
    let mut hess = vec![1.0; n];
    let mut row_buf = Vec::with_capacity(x.n_features());
    let mut pool = Vec::new();
    let all_rows: Vec<u32> = (0..n as u32).collect();
    let cons = SplitConstraints {
        min_data_in_leaf: params.min_data_in_leaf.min(u32::MAX as usize) as u32,
        lambda_l2: params.lambda_l2,
    };

    for round in 0..params.max_rounds {
        for i in 0..n {
            grad[i] = pred[i] - y[i];
        }
        let (rows, weighted) = match &params.goss {
            Some(g) => {
                let s = goss_sample(
                    &grad,
                    g.top_rate,
                    g.other_rate,
                    derive_seed(params.seed, &[round as u64]),
                )?;
                hess.iter_mut().for_each(|h| *h = 0.0);
                let mut wg = vec![0.0; n];
                for (&r, &w) in s.rows.iter().zip(&s.weights) {
                    wg[r as usize] = grad[r as usize] * w;
                    hess[r as usize] = w;
                }
                (s.rows, Some(wg))
            }
            None => (all_rows.clone(), None),
        };
        let g = weighted.as_deref().unwrap_or(&grad);
        let Some(grown) = grow_tree(&binned, rows, g, &hess, params, cons, &mut pool) else {
            log::debug!("round {round}: root cannot split, stopping");
            break;
        };
        match &params.goss {
            None => {
                for (leaf_node, leaf_rows) in &grown.leaf_rows {
                    let Node::Leaf { value, .. } = grown.tree.nodes[*leaf_node] else {
                        unreachable!()
                    };
                    for &r in leaf_rows {
                        pred[r as usize] += value;
                    }
                }
            }
            Some(_) => {
                for (i, p) in pred.iter_mut().enumerate() {
                    x.fill_row(i, &mut row_buf);
                    *p += grown.tree.predict(&row_buf);
                }
            }
        }
        history.train_rmse.push(rmse(&pred, y));
        if let (Some((vx, vy)), Some(vp)) = (valid, valid_pred.as_mut()) {
            for (i, p) in vp.iter_mut().enumerate() {
                vx.fill_row(i, &mut row_buf);
                *p += grown.tree.predict(&row_buf);
            }
            let score = rmse(vp, vy);
            history.valid_rmse.push(score);
            if score < best.0 {
                best = (score, round + 1);
            }
        }
        ensemble.trees.push(grown.tree);
        if valid.is_some() && round + 1 - best.1 >= params.early_stopping_rounds {
            break;
        }
    }
    if valid.is_some() {
        ensemble.truncate(best.1);
        history.best_iteration = best.1;
    } else {
        history.best_iteration = ensemble.trees.len();
    }
    Ok(TrainOutput { ensemble, history })
}

struct Grown {
    tree: Tree,
    /// Leaf node index and the sampled rows that reached it.
    leaf_rows: Vec<(usize, Vec<u32>)>,
}

struct Leaf {
    node: usize,
    begin: usize,
    end: usize,
    stats: NodeStats,
    /// Kept only while the leaf still has a split to offer.
    hist: Option<Histogram>,
    split: Option<SplitCandidate>,
}

fn sum_stats(rows: &[u32], grad: &[f64], hess: &[f64]) -> NodeStats {
    let mut s = NodeStats::default();
    for &r in rows {
        s.g += grad[r as usize];
        s.h += hess[r as usize];
        s.n += 1;
    }
    s
}

fn histogram_for(
    pool: &mut Vec<Histogram>,
    binned: &BinnedMatrix,
    rows: &[u32],
    grad: &[f64],
    hess: &[f64],
) -> Histogram {
    match pool.pop() {
        Some(mut h) => {
            h.rebuild(binned, rows, grad, hess);
            h
        }
        None => Histogram::build(binned, rows, grad, hess),
    }
}

/// Histograms of the two children, built only for children that may still
/// split. A child's histogram comes either from its own rows or from the
/// parent minus its sibling, whichever touches less data.
fn child_histograms(
    binned: &BinnedMatrix,
    mut parent: Histogram,
    rows: [&[u32]; 2],
    needed: [bool; 2],
    grad: &[f64],
    hess: &[f64],
    pool: &mut Vec<Histogram>,
) -> (Option<Histogram>, Option<Histogram>) {
    let cost = |r: &[u32]| r.len() * binned.bins.len();
    let mut out = [None, None];
    match needed {
        [false, false] => pool.push(parent),
        [true, true] => {
            let small = usize::from(rows[1].len() < rows[0].len());
            let h = histogram_for(pool, binned, rows[small], grad, hess);
            parent.subtract(&h);
            out[small] = Some(h);
            out[1 - small] = Some(parent);
        }
        _ => {
            let want = usize::from(needed[1]);
            let other = 1 - want;
            if cost(rows[want]) <= cost(rows[other]) + binned.total_bins {
                pool.push(parent);
                out[want] = Some(histogram_for(pool, binned, rows[want], grad, hess));
            } else {
                let h = histogram_for(pool, binned, rows[other], grad, hess);
                parent.subtract(&h);
                pool.push(h);
                out[want] = Some(parent);
            }
        }
    }
    let [l, r] = out;
    (l, r)
}

/// Grows one tree by repeatedly splitting the leaf with the largest gain.
/// Returns `None` when the root admits no split. Histogram buffers are
/// borrowed from and returned to `pool`.
fn grow_tree(
    binned: &BinnedMatrix,
    mut rows: Vec<u32>,
    grad: &[f64],
    hess: &[f64],
    params: &TrainParams,
    cons: SplitConstraints,
    pool: &mut Vec<Histogram>,
) -> Option<Grown> {
    let root_stats = sum_stats(&rows, grad, hess);
    let root_hist = histogram_for(pool, binned, &rows, grad, hess);
    let Some(root_split) = find_best_split(&root_hist, root_stats, binned, cons) else {
        pool.push(root_hist);
        return None;
    };
    let mut nodes = vec![Node::Leaf {
        value: 0.0,
        cover: root_stats.n,
    }];
    let mut leaves = vec![Leaf {
        node: 0,
        begin: 0,
        end: rows.len(),
        stats: root_stats,
        hist: Some(root_hist),
        split: Some(root_split),
    }];
    let mut scratch: Vec<u32> = Vec::with_capacity(rows.len());

    while leaves.len() < params.num_leaves {
        // leaves stay in creation order, so the first maximum is the oldest
        let mut pick: Option<usize> = None;
        for (i, l) in leaves.iter().enumerate() {
            if let Some(s) = &l.split {
                if pick.is_none_or(|p| s.gain > leaves[p].split.as_ref().unwrap().gain) {
                    pick = Some(i);
                }
            }
        }
        let Some(pi) = pick else { break };
        let parent = leaves.remove(pi);
        let split = parent.split.unwrap();
        let col = &binned.bins[split.feature];
        let missing_bin = binned.mappers[split.feature].missing_bin();

        // stable partition of the parent's rows
        scratch.clear();
        let segment = &mut rows[parent.begin..parent.end];
        let mut n_left = 0;
        for k in 0..segment.len() {
            let r = segment[k];
            if split.goes_left(col[r as usize], missing_bin) {
                segment[n_left] = r;
                n_left += 1;
            } else {
                scratch.push(r);
            }
        }
        segment[n_left..].copy_from_slice(&scratch);
        let mid = parent.begin + n_left;

        let left_rows = &rows[parent.begin..mid];
        let right_rows = &rows[mid..parent.end];
        let left_stats = sum_stats(left_rows, grad, hess);
        let right_stats = sum_stats(right_rows, grad, hess);
        let want_more = leaves.len() + 2 < params.num_leaves;
        let splittable = |s: &NodeStats| want_more && s.n >= 2 * cons.min_data_in_leaf;
        let parent_hist = parent.hist.expect("splittable leaves keep their histogram");
        let (left_hist, right_hist) = child_histograms(
            binned,
            parent_hist,
            [left_rows, right_rows],
            [splittable(&left_stats), splittable(&right_stats)],
            grad,
            hess,
            pool,
        );

        let left_node = nodes.len();
        let right_node = left_node + 1;
        nodes.push(Node::Leaf {
            value: 0.0,
            cover: left_stats.n,
        });
        nodes.push(Node::Leaf {
            value: 0.0,
            cover: right_stats.n,
        });
        nodes[parent.node] = match split.rule {
            SplitRule::Numeric { threshold, .. } => Node::Numeric {
                feature: split.feature,
                threshold,
                default_left: split.default_left,
                cover: parent.stats.n,
                left: left_node,
                right: right_node,
            },
            SplitRule::Categorical { ref categories } => Node::Categorical {
                feature: split.feature,
                categories: categories.clone(),
                default_left: split.default_left,
                cover: parent.stats.n,
                left: left_node,
                right: right_node,
            },
        };
        for (node, begin, end, stats, hist) in [
            (left_node, parent.begin, mid, left_stats, left_hist),
            (right_node, mid, parent.end, right_stats, right_hist),
        ] {
            let split = hist.as_ref().and_then(|h| find_best_split(h, stats, binned, cons));
            let hist = match (hist, &split) {
                (Some(h), None) => {
                    pool.push(h);
                    None
                }
                (h, _) => h,
            };
            leaves.push(Leaf {
                node,
                begin,
                end,
                stats,
                hist,
                split,
            });
        }
    }

    let mut leaf_rows = Vec::with_capacity(leaves.len());
    for l in &mut leaves {
        pool.extend(l.hist.take());
        nodes[l.node] = Node::Leaf {
            value: params.learning_rate * l.stats.leaf_value(params.lambda_l2),
            cover: l.stats.n,
        };
        leaf_rows.push((l.node, rows[l.begin..l.end].to_vec()));
    }
    Some(Grown {
        tree: Tree { nodes },
        leaf_rows,
    })
}
