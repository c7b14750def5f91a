//! Embedding baseline: weighted node2vec walks over the max-normalized
//! transition matrix, skip-gram embeddings, and a classifier trained on the
//! known nodes.

mod classifier;
mod skipgram;
mod walks;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_io::{MatrixFile, MatrixKind};

pub use classifier::{
    fit_classifier, predict_unknown, Classifier, ClassifierConfig, ClassifierKind, Loss, TrainReport,
};
pub use skipgram::train_embeddings;
pub use walks::{random_walks, WalkCorpus};

/// Which node pairs count as adjacent for the in-out parameter `q`.
///
/// `Pm` is strictly positive, so every pair has some transition weight; this
/// only decides where the `1/q` bias applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adjacency {
    /// `x` is adjacent to `t` when `Pm[t][x] > Pm[t][t]`, i.e. the partial
    /// correlation between them is positive.
    Positive,
    /// Every pair is adjacent (`q` has no effect).
    Complete,
    /// `x` is adjacent to `t` when `Pm[t][x] > floor`.
    Floor(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dimension: usize,
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub window: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    /// Initial skip-gram learning rate, decayed linearly to near zero.
    pub learning_rate: f64,
    pub adjacency: Adjacency,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dimension: 64,
            walk_length: 20,
            walks_per_node: 10,
            p: 1.0,
            q: 2.0,
            window: 5,
            negative_samples: 5,
            epochs: 5,
            learning_rate: 0.025,
            adjacency: Adjacency::Positive,
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.dimension == 0 {
            return bad("embedding dimension must be ≥ 1");
        }
        if !(self.p > 0.0 && self.p.is_finite()) || !(self.q > 0.0 && self.q.is_finite()) {
            return bad("p and q must be positive and finite");
        }
        if self.walk_length == 0 || self.walks_per_node == 0 {
            return bad("walk_length and walks_per_node must be ≥ 1");
        }
        if self.window == 0 || self.epochs == 0 {
            return bad("window and epochs must be ≥ 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if let Adjacency::Floor(f) = self.adjacency {
            if !f.is_finite() {
                return bad("adjacency floor must be finite");
            }
        }
        Ok(())
    }
}

/// One `E`-dimensional vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbeddings {
    vectors: DMatrix<f64>,
}

impl NodeEmbeddings {
    pub fn new(vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Err(Error::InvalidArgument("embeddings need at least one dimension".into()));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("embeddings contain non-finite values".into()));
        }
        Ok(Self { vectors })
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn num_nodes(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dimension(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn to_file(&self, node_ids: Option<Vec<String>>) -> MatrixFile {
        let file = MatrixFile::new(MatrixKind::Embeddings, self.vectors.clone());
        match node_ids {
            Some(ids) => file.with_node_ids(ids),
            None => file,
        }
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        if file.kind != MatrixKind::Embeddings {
            return Err(Error::Matrix(format!("{:?} is not an embedding matrix", file.kind)));
        }
        Self::new(file.matrix.clone())
    }
}
