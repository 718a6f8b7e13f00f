//! Convolutional sentence classifier with two softmax heads.
//!
//! Word vectors are stacked into a sentence matrix, convolved with filter
//! banks of several widths, rectified, max-pooled over time, passed through
//! inverted dropout, and fed to two independent softmax layers: one over
//! origin departments and one over destination departments.

mod adam;
mod model;
mod train;

use serde::{Deserialize, Serialize};

pub use adam::AdamState;
pub use model::{
    init_params, loss, relu, softmax, CnnModel, CnnParams, FilterBank, ForwardTrace, Head,
    HeadPrediction, HeadTrace, Mode, PredictionPair,
};
pub use train::{train, EpochStats, History};

use crate::{Error, Result};

/// Hyperparameters. Field names double as the JSON config file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub embedding_dim: usize,
    pub filter_widths: Vec<usize>,
    pub feature_maps: usize,
    /// Number of departments; filled in from the lexicon when training.
    pub num_departments: usize,
    pub max_len: usize,
    pub dropout_keep: f64,
    pub l2: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    /// Fraction of the training split held out for early stopping.
    pub validation_fraction: f64,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 64,
            filter_widths: vec![3, 4, 5],
            feature_maps: 100,
            num_departments: 0,
            max_len: crate::encode::DEFAULT_MAX_LEN,
            dropout_keep: 0.5,
            l2: 1.0e-4,
            lr: 1.0e-3,
            batch_size: 64,
            epochs: 10,
            patience: 2,
            validation_fraction: 0.1,
            top_k: 5,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

impl CnnConfig {
    /// Length of the pooled feature vector: one unit per (width, map).
    pub fn pooled_len(&self) -> usize {
        self.filter_widths.len() * self.feature_maps
    }

    pub fn max_width(&self) -> usize {
        self.filter_widths.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.embedding_dim == 0 || self.feature_maps == 0 {
            return bad("embedding_dim and feature_maps must be positive".into());
        }
        if self.filter_widths.is_empty() || self.filter_widths.contains(&0) {
            return bad(format!("filter widths {:?} must be non-empty and >= 1", self.filter_widths));
        }
        if self.max_len < self.max_width() {
            return bad(format!(
                "max_len {} is shorter than the widest filter {}",
                self.max_len,
                self.max_width()
            ));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return bad(format!("dropout_keep {} outside (0, 1]", self.dropout_keep));
        }
        if self.num_departments < 2 {
            return bad(format!("need at least 2 departments, got {}", self.num_departments));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputArchitecture {
    /// One softmax per role, `P` units each.
    Dual,
    /// One softmax over ordered (origin, destination) pairs.
    SinglePair,
}

/// Trainable parameters of the output layer for `P` departments and `F`
/// feature maps per filter width, with three widths.
pub fn count_output_params(p: u64, f: u64, arch: OutputArchitecture) -> u64 {
    let fan_in = 3 * f + 1;
    match arch {
        OutputArchitecture::Dual => 2 * p * fan_in,
        OutputArchitecture::SinglePair => p * (p - 1) * fan_in,
    }
}
