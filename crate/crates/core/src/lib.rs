//! Situation-awareness prediction from physiological and eye-tracking
//! recordings: windowed feature extraction, leaf-wise gradient boosting,
//! exact TreeSHAP attributions, cross-validated evaluation and a synthetic
//! study generator with planted ground truth.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod explain;
pub mod featureset;
pub mod gaze;
pub mod gbdt;
pub mod physio;
pub mod pipeline;
pub mod seeds;
pub mod session;
pub mod synthgen;
pub mod timebase;

pub use error::{Error, Result};
