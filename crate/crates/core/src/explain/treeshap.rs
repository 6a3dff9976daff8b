//! Exact Shapley values for tree ensembles under the cover-weighted
//! path-dependent conditional expectation, in polynomial time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::{Ensemble, FeatureMatrix, Node, Tree};

#[derive(Debug, Clone, Copy)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut [PathElem], len: usize, zero: f64, one: f64, feature: Option<usize>) -> usize {
    let l = len;
    path[l] = PathElem {
        feature,
        zero,
        one,
        weight: if l == 0 { 1.0 } else { 0.0 },
    };
    let lf = (l + 1) as f64;
    for i in (0..l).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / lf;
        path[i].weight = zero * path[i].weight * (l - i) as f64 / lf;
    }
    l + 1
}

fn unwind(path: &mut [PathElem], len: usize, index: usize) -> usize {
    let depth = len - 1;
    let PathElem { zero, one, .. } = path[index];
    let df = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * df / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (depth - i) as f64 / df;
        } else {
            path[i].weight = path[i].weight * df / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    depth
}

fn unwound_sum(path: &[PathElem], index: usize) -> f64 {
    let depth = path.len() - 1;
    let PathElem { zero, one, .. } = path[index];
    let mut total = 0.0;
    if one != 0.0 {
        let mut next = path[depth].weight;
        for i in (0..depth).rev() {
            let tmp = next / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) as f64;
        }
    } else {
        for i in (0..depth).rev() {
            total += path[i].weight / (zero * (depth - i) as f64);
        }
    }
    total * (depth + 1) as f64
}

/// Walks the tree with the current path stored in `arena[off..off + len]`;
/// each level copies its path into the space after it before descending.
#[allow(clippy::too_many_arguments)]
fn recurse(
    tree: &Tree,
    node: usize,
    row: &[f64],
    phi: &mut [f64],
    arena: &mut [PathElem],
    off: usize,
    len: usize,
    zero: f64,
    one: f64,
    feature: Option<usize>,
) {
    let path = &mut arena[off..];
    let mut len = extend(path, len, zero, one, feature);
    let n = &tree.nodes[node];
    if let Node::Leaf { value, .. } = n {
        let path = &path[..len];
        for i in 1..len {
            let w = unwound_sum(path, i);
            let e = path[i];
            phi[e.feature.unwrap()] += w * (e.one - e.zero) * value;
        }
        return;
    }
    let (f, left, right) = n.split_parts().unwrap();
    let (hot, cold) = if n.goes_left(row[f]) {
        (left, right)
    } else {
        (right, left)
    };
    let cover = n.cover() as f64;
    let hot_zero = tree.nodes[hot].cover() as f64 / cover;
    let cold_zero = tree.nodes[cold].cover() as f64 / cover;
    let (mut in_zero, mut in_one) = (1.0, 1.0);
    if let Some(k) = (1..len).find(|&k| path[k].feature == Some(f)) {
        in_zero = path[k].zero;
        in_one = path[k].one;
        len = unwind(path, len, k);
    }
    path.copy_within(0..len, len);
    recurse(
        tree,
        hot,
        row,
        phi,
        arena,
        off + len,
        len,
        hot_zero * in_zero,
        in_one,
        Some(f),
    );
    recurse(tree, cold, row, phi, arena, off, len, cold_zero * in_zero, 0.0, Some(f));
}

const EMPTY: PathElem = PathElem {
    feature: None,
    zero: 0.0,
    one: 0.0,
    weight: 0.0,
};

/// Path storage large enough for trees of depth `depth`.
fn arena_for(depth: usize) -> Vec<PathElem> {
    vec![EMPTY; (depth + 3) * (depth + 3)]
}

fn ensemble_arena(ensemble: &Ensemble) -> Vec<PathElem> {
    arena_for(ensemble.trees.iter().map(Tree::max_depth).max().unwrap_or(0))
}

/// `arena` must come from [`arena_for`] with at least the tree's depth.
fn shap_with_arena(tree: &Tree, row: &[f64], phi: &mut [f64], arena: &mut [PathElem]) {
    if tree.nodes[0].is_leaf() || tree.nodes[0].cover() == 0 {
        return;
    }
    recurse(tree, 0, row, phi, arena, 0, 0, 1.0, 1.0, None);
}

/// Adds one tree's attributions for `row` into `phi`.
pub fn tree_shap_into(tree: &Tree, row: &[f64], phi: &mut [f64]) {
    shap_with_arena(tree, row, phi, &mut arena_for(tree.max_depth()));
}

/// Adds the whole ensemble's attributions for `row` into `phi`.
fn ensemble_shap_into(ensemble: &Ensemble, row: &[f64], phi: &mut [f64], arena: &mut [PathElem]) {
    for t in &ensemble.trees {
        shap_with_arena(t, row, phi, arena);
    }
}

/// Attributions of one row plus the expected model output they start from.
#[derive(Debug, Clone, PartialEq)]
pub struct RowShap {
    pub base: f64,
    pub phi: Vec<f64>,
}

/// Expected output of the ensemble over the training distribution.
pub fn expected_value(ensemble: &Ensemble) -> f64 {
    ensemble.base_score + ensemble.trees.iter().map(Tree::expected_value).sum::<f64>()
}

pub fn tree_shap(ensemble: &Ensemble, row: &[f64]) -> Result<RowShap> {
    ensemble.check_row(row)?;
    let mut phi = vec![0.0; ensemble.n_features()];
    ensemble_shap_into(ensemble, row, &mut phi, &mut ensemble_arena(ensemble));
    Ok(RowShap {
        base: expected_value(ensemble),
        phi,
    })
}

/// Attributions for a set of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub feature_names: Vec<String>,
    /// Caller-defined id of each row (e.g. its dataset index).
    pub row_ids: Vec<usize>,
    pub base: Vec<f64>,
    /// `values[i][j]` is the attribution of feature `j` on row `i`.
    pub values: Vec<Vec<f64>>,
}

impl ShapMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    /// Mean absolute attribution per feature.
    pub fn mean_abs(&self) -> Vec<f64> {
        let m = self.feature_names.len();
        let mut acc = vec![0.0; m];
        for row in &self.values {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v.abs();
            }
        }
        let n = self.values.len().max(1) as f64;
        acc.iter().map(|a| a / n).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// Rows of several matrices over the same features, concatenated.
    pub fn concat(parts: &[ShapMatrix]) -> Result<ShapMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InsufficientData("no SHAP matrices".into()))?;
        let mut out = ShapMatrix {
            feature_names: first.feature_names.clone(),
            row_ids: Vec::new(),
            base: Vec::new(),
            values: Vec::new(),
        };
        for p in parts {
            if p.feature_names != out.feature_names {
                return Err(Error::Schema("SHAP matrices have different features".into()));
            }
            out.row_ids.extend(&p.row_ids);
            out.base.extend(&p.base);
            out.values.extend(p.values.iter().cloned());
        }
        Ok(out)
    }

    /// Rows sorted by id.
    pub fn sorted_by_row(mut self) -> ShapMatrix {
        let mut order: Vec<usize> = (0..self.row_ids.len()).collect();
        order.sort_by_key(|&i| self.row_ids[i]);
        self.row_ids = order.iter().map(|&i| self.row_ids[i]).collect();
        self.base = order.iter().map(|&i| self.base[i]).collect();
        let mut values = std::mem::take(&mut self.values);
        self.values = order.iter().map(|&i| std::mem::take(&mut values[i])).collect();
        self
    }
}

/// Attributions for the rows `rows` of `x`, computed in parallel and
/// returned in the given order.
pub fn shap_matrix(ensemble: &Ensemble, x: &FeatureMatrix, rows: &[usize]) -> Result<ShapMatrix> {
    ensemble.check_matrix(x)?;
    let base = expected_value(ensemble);
    let values = rows
        .par_iter()
        .map_init(
            || (Vec::new(), ensemble_arena(ensemble)),
            |(row, arena), &i| {
                x.fill_row(i, row);
                let mut phi = vec![0.0; x.n_features()];
                ensemble_shap_into(ensemble, row, &mut phi, arena);
                phi
            },
        )
        .collect();
    Ok(ShapMatrix {
        feature_names: x.names().to_vec(),
        row_ids: rows.to_vec(),
        base: vec![base; rows.len()],
        values,
    })
}
