//! Bag-of-words generator with class-specific topic words.
//!
//! Each category owns a contiguous block of the vocabulary. A node includes a
//! word from its own block with probability `topic_rate` and any other word
//! with probability `background_rate`, which makes same-class publications
//! positively correlated across words.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, SourceTag};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub nodes: usize,
    pub categories: usize,
    pub vocabulary: usize,
    pub topic_rate: f64,
    pub background_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            nodes: 400,
            categories: 4,
            vocabulary: 600,
            topic_rate: 0.12,
            background_rate: 0.04,
            seed: 0,
        }
    }
}

pub fn synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    if cfg.categories < 2 || cfg.vocabulary < cfg.categories || cfg.nodes == 0 {
        return Err(Error::InvalidArgument(format!(
            "synthetic dataset needs nodes ≥ 1, categories ≥ 2 and vocabulary ≥ categories \
             (got {}, {}, {})",
            cfg.nodes, cfg.categories, cfg.vocabulary
        )));
    }
    for rate in [cfg.topic_rate, cfg.background_rate] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!("rate {rate} outside [0, 1]")));
        }
    }
    let mut rng = seed::rng(cfg.seed);
    let block = cfg.vocabulary / cfg.categories;
    let labels: Vec<usize> = (0..cfg.nodes).map(|i| i % cfg.categories).collect();
    let mut features = DMatrix::zeros(cfg.vocabulary, cfg.nodes);
    for (node, &label) in labels.iter().enumerate() {
        let lo = label * block;
        let hi = lo + block;
        for word in 0..cfg.vocabulary {
            let rate = if (lo..hi).contains(&word) {
                cfg.topic_rate
            } else {
                cfg.background_rate
            };
            if rng.random::<f64>() < rate {
                features[(word, node)] = 1.0;
            }
        }
    }
    Dataset::new(
        (0..cfg.nodes).map(|i| format!("s{i}")).collect(),
        features,
        labels,
        (0..cfg.categories).map(|c| format!("class-{c}")).collect(),
        SourceTag::Synthetic,
    )
}
