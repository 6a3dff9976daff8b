use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

/// One tree node. Split nodes reference their children by index into
/// [`Tree::nodes`]; `cover` is the number of training rows that reached the
/// node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Numeric {
        feature: usize,
        threshold: f64,
        default_left: bool,
        cover: u32,
        left: usize,
        right: usize,
    },
    Categorical {
        feature: usize,
        categories: Vec<u32>,
        default_left: bool,
        cover: u32,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        cover: u32,
    },
}

impl Node {
    pub fn cover(&self) -> u32 {
        match self {
            Node::Numeric { cover, .. } | Node::Categorical { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    /// `(feature, left, right)` of a split node.
    pub fn split_parts(&self) -> Option<(usize, usize, usize)> {
        match self {
            Node::Numeric {
                feature, left, right, ..
            }
            | Node::Categorical {
                feature, left, right, ..
            } => Some((*feature, *left, *right)),
            Node::Leaf { .. } => None,
        }
    }

    /// Whether a raw value is routed to the left child. Panics on leaves.
    pub fn goes_left(&self, v: f64) -> bool {
        match self {
            Node::Numeric {
                threshold,
                default_left,
                ..
            } => {
                if v.is_nan() {
                    *default_left
                } else {
                    v <= *threshold
                }
            }
            Node::Categorical {
                categories,
                default_left,
                ..
            } => {
                if v.is_nan() {
                    *default_left
                } else {
                    v >= 0.0 && v.fract() == 0.0 && categories.binary_search(&(v as u32)).is_ok()
                }
            }
            Node::Leaf { .. } => panic!("goes_left on a leaf"),
        }
    }

    /// Child index a row follows from this split node.
    pub fn next(&self, row: &[f64]) -> usize {
        let (feature, left, right) = self.split_parts().expect("split node");
        if self.goes_left(row[feature]) {
            left
        } else {
            right
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64, cover: u32) -> Tree {
        Tree {
            nodes: vec![Node::Leaf { value, cover }],
        }
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.is_leaf() {
                return i;
            }
            i = node.next(row);
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value, .. } => value,
            _ => unreachable!(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn max_depth(&self) -> usize {
        fn depth(t: &Tree, i: usize) -> usize {
            match t.nodes[i].split_parts() {
                Some((_, l, r)) => 1 + depth(t, l).max(depth(t, r)),
                None => 0,
            }
        }
        depth(self, 0)
    }

    /// Cover-weighted mean leaf value.
    pub fn expected_value(&self) -> f64 {
        fn walk(t: &Tree, i: usize) -> f64 {
            match &t.nodes[i] {
                Node::Leaf { value, .. } => *value,
                node => {
                    let (_, l, r) = node.split_parts().unwrap();
                    let c = node.cover() as f64;
                    (t.nodes[l].cover() as f64 * walk(t, l) + t.nodes[r].cover() as f64 * walk(t, r)) / c
                }
            }
        }
        walk(self, 0)
    }

    pub fn uses_feature(&self, feature: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| n.split_parts().is_some_and(|(f, _, _)| f == feature))
    }

    /// Structural checks: child indices in range, every node reachable once,
    /// children covers summing to the parent cover.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = self
                .nodes
                .get(i)
                .ok_or_else(|| Error::Schema(format!("node index {i} out of range")))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Schema(format!("node {i} reachable twice")));
            }
            if let Some((_, l, r)) = node.split_parts() {
                let (cl, cr) = (self.nodes.get(l).map(Node::cover), self.nodes.get(r).map(Node::cover));
                match (cl, cr) {
                    (Some(a), Some(b)) if a + b == node.cover() => {}
                    _ => return Err(Error::Schema(format!("child covers of node {i} do not sum"))),
                }
                stack.push(l);
                stack.push(r);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Schema("unreachable tree nodes".into()));
        }
        Ok(())
    }
}

/// Additive tree ensemble. Leaf values already include the learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub base_score: f64,
    pub learning_rate: f64,
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    pub trees: Vec<Tree>,
}

impl Ensemble {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Schema(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    pub fn check_matrix(&self, x: &FeatureMatrix) -> Result<()> {
        if x.names() != self.feature_names.as_slice() {
            return Err(Error::Schema(format!(
                "matrix features {:?} do not match model features {:?}",
                x.names(),
                self.feature_names
            )));
        }
        Ok(())
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_matrix(x)?;
        let mut buf = Vec::with_capacity(x.n_features());
        Ok((0..x.n_rows())
            .map(|i| {
                x.fill_row(i, &mut buf);
                self.predict_row(&buf)
            })
            .collect())
    }

    pub fn truncate(&mut self, n_trees: usize) {
        self.trees.truncate(n_trees);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Ensemble> {
        let e: Ensemble = serde_json::from_str(s)?;
        e.validate()?;
        Ok(e)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Ensemble> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ensemble::from_json(&s).map_err(|e| match e {
            Error::Json(j) => Error::malformed(path, j),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_names.len() != self.feature_kinds.len() {
            return Err(Error::Schema("feature names and kinds differ in length".into()));
        }
        for t in &self.trees {
            t.validate()?;
            for n in &t.nodes {
                if let Some((f, _, _)) = n.split_parts() {
                    if f >= self.n_features() {
                        return Err(Error::Schema(format!("split on unknown feature {f}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Prediction for one row with schema check.
pub fn predict(ensemble: &Ensemble, row: &[f64]) -> Result<f64> {
    ensemble.check_row(row)?;
    Ok(ensemble.predict_row(row))
}
