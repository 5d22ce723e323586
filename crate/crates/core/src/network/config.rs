use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::conv::ConvShape;
use crate::error::{Error, Result};

/// Which text segment feeds the text branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TextMode {
    #[serde(rename = "aud")]
    Aud,
    #[serde(rename = "man")]
    Man,
    #[serde(rename = "aud+man")]
    AudMan,
    #[serde(rename = "none")]
    None,
}

impl TextMode {
    pub const ALL: [TextMode; 4] = [TextMode::AudMan, TextMode::Aud, TextMode::Man, TextMode::None];

    pub fn has_text(self) -> bool {
        self != TextMode::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TextMode::Aud => "aud",
            TextMode::Man => "man",
            TextMode::AudMan => "aud+man",
            TextMode::None => "none",
        }
    }
}

impl fmt::Display for TextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TextMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aud" => Ok(TextMode::Aud),
            "man" => Ok(TextMode::Man),
            "aud+man" => Ok(TextMode::AudMan),
            "none" => Ok(TextMode::None),
            other => Err(Error::Config(format!(
                "unknown text mode {other:?} (expected aud, man, aud+man or none)"
            ))),
        }
    }
}

/// Architecture and training hyperparameters. Defaults are the chosen
/// configuration of the original study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Words per block (`k`).
    pub block_size: usize,
    /// Words per filter (`γ`).
    pub filter_width: usize,
    /// Filter count (`m`).
    pub filters: usize,
    /// Max-pool window (`τ`).
    pub pool_size: usize,
    /// LSTM cell size (`d`).
    pub cell_size: usize,
    /// Embedding dimension (`v`).
    pub embedding_dim: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub validation_fraction: f64,
    pub patience: usize,
    pub text_mode: TextMode,
    pub seed: u64,
    /// Bias of the forget gate at initialization; other biases start at 0.
    pub forget_bias: f64,
    /// Whether embedding rows are updated during training.
    pub fine_tune_embeddings: bool,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            block_size: 20,
            filter_width: 10,
            filters: 40,
            pool_size: 4,
            cell_size: 100,
            embedding_dim: 300,
            hidden1: 200,
            hidden2: 50,
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 10,
            validation_fraction: 0.10,
            patience: 1,
            text_mode: TextMode::AudMan,
            seed: 0,
            forget_bias: 1.0,
            fine_tune_embeddings: true,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl NetworkConfig {
    pub fn conv_shape(&self) -> ConvShape {
        ConvShape {
            block_size: self.block_size,
            dim: self.embedding_dim,
            width: self.filter_width,
            filters: self.filters,
            pool: self.pool_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size < 2 {
            return Err(Error::Config(format!("block size {} must be at least 2", self.block_size)));
        }
        self.conv_shape().validate()?;
        let positive = [
            ("cell_size", self.cell_size),
            ("hidden1", self.hidden1),
            ("hidden2", self.hidden2),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation fraction {} must lie in [0, 1)",
                self.validation_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_epsilon <= 0.0 {
            return Err(Error::Config("Adam parameters out of range".into()));
        }
        Ok(())
    }
}

/// Hyperparameter grid. Filter width follows the block size as `floor(k/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub block_sizes: Vec<usize>,
    pub filters: Vec<usize>,
    pub pool_sizes: Vec<usize>,
    pub cell_sizes: Vec<usize>,
    pub learning_rates: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            block_sizes: vec![10, 15, 20],
            filters: vec![40, 60],
            pool_sizes: vec![2, 4, 6],
            cell_sizes: vec![50, 100, 150],
            learning_rates: vec![1e-3, 1e-4],
        }
    }
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.block_sizes.len() * self.filters.len() * self.pool_sizes.len() * self.cell_sizes.len() * self.learning_rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every cell applied to `base`, in lexicographic grid order.
    pub fn cells(&self, base: &NetworkConfig) -> Vec<NetworkConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &k in &self.block_sizes {
            for &m in &self.filters {
                for &tau in &self.pool_sizes {
                    for &d in &self.cell_sizes {
                        for &lr in &self.learning_rates {
                            out.push(NetworkConfig {
                                block_size: k,
                                filter_width: k / 2,
                                filters: m,
                                pool_size: tau,
                                cell_size: d,
                                learning_rate: lr,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}
