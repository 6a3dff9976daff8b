use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gradient-based one-side sampling rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GossParams {
    /// Fraction of rows with the largest |gradient| kept with weight 1.
    pub top_rate: f64,
    /// Fraction of rows sampled uniformly from the remainder and up-weighted.
    pub other_rate: f64,
}

impl Default for GossParams {
    fn default() -> Self {
        GossParams {
            top_rate: 0.2,
            other_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub min_data_in_leaf: usize,
    pub num_leaves: usize,
    pub early_stopping_rounds: usize,
    pub max_rounds: usize,
    pub max_bin: usize,
    pub lambda_l2: f64,
    pub goss: Option<GossParams>,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 0.05,
            min_data_in_leaf: 20,
            num_leaves: 50,
            early_stopping_rounds: 100,
            max_rounds: 1000,
            max_bin: 255,
            lambda_l2: 0.0,
            goss: None,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate {} outside (0, 1]", self.learning_rate));
        }
        if self.num_leaves < 2 {
            return bad(format!("num_leaves {} must be at least 2", self.num_leaves));
        }
        if self.min_data_in_leaf < 1 {
            return bad("min_data_in_leaf must be at least 1".into());
        }
        if !(2..=u16::MAX as usize - 1).contains(&self.max_bin) {
            return bad(format!("max_bin {} outside [2, {}]", self.max_bin, u16::MAX - 1));
        }
        if !(self.lambda_l2.is_finite() && self.lambda_l2 >= 0.0) {
            return bad(format!("lambda_l2 {} must be non-negative", self.lambda_l2));
        }
        if let Some(g) = &self.goss {
            let in_unit = |v: f64| (0.0..=1.0).contains(&v);
            if !in_unit(g.top_rate) || !in_unit(g.other_rate) || g.top_rate + g.other_rate > 1.0 {
                return bad(format!(
                    "GOSS rates a={} b={} need 0 <= a, b and a + b <= 1",
                    g.top_rate, g.other_rate
                ));
            }
            if g.top_rate == 0.0 && g.other_rate == 0.0 {
                return bad("GOSS with a = b = 0 keeps no rows".into());
            }
        }
        Ok(())
    }
}
