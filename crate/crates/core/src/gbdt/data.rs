use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    /// Values are category ids `0..n_categories` stored as floats.
    Categorical {
        n_categories: u32,
    },
}

/// Column-major feature matrix; `NaN` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    kinds: Vec<FeatureKind>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, kinds: Vec<FeatureKind>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != kinds.len() || names.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} names, {} kinds and {} columns",
                names.len(),
                kinds.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        if let Some((i, _)) = columns.iter().enumerate().find(|(_, c)| c.len() != n_rows) {
            return Err(Error::Schema(format!("column `{}` has a different length", names[i])));
        }
        for (j, kind) in kinds.iter().enumerate() {
            if let FeatureKind::Categorical { n_categories } = kind {
                let bad = columns[j]
                    .iter()
                    .find(|v| !v.is_nan() && !(v.fract() == 0.0 && **v >= 0.0 && **v < *n_categories as f64));
                if let Some(v) = bad {
                    return Err(Error::Schema(format!(
                        "categorical `{}` holds invalid category id {v}",
                        names[j]
                    )));
                }
            } else if let Some(v) = columns[j].iter().find(|v| v.is_infinite()) {
                return Err(Error::Schema(format!(
                    "feature `{}` holds infinite value {v}",
                    names[j]
                )));
            }
        }
        Ok(FeatureMatrix {
            names,
            kinds,
            columns,
            n_rows,
        })
    }

    /// All-numeric matrix from row-major data.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); n_cols];
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::Schema("ragged rows".into()));
            }
            for (c, v) in columns.iter_mut().zip(r) {
                c.push(*v);
            }
        }
        let names = (0..n_cols).map(|j| format!("f{j}")).collect();
        FeatureMatrix::new(names, vec![FeatureKind::Numeric; n_cols], columns)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn fill_row(&self, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.columns.iter().map(|c| c[i]));
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            n_rows: rows.len(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            kinds: cols.iter().map(|&j| self.kinds[j]).collect(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            n_rows: self.n_rows,
        }
    }
}
