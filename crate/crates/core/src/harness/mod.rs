//! Experiment harness: seeded multi-run evaluation of every propagation
//! method and the embedding baseline, hyperparameter selection on a
//! validation seed range, and masking / confidence-threshold sweeps.
//!
//! An experiment is described by an [`ExperimentSpec`] (JSON, all fields
//! optional except `dataset`). Every run draws its subset and mask from a
//! seed derived from `(master seed, split, run, masking level)`, so results
//! do not depend on the worker count and validation runs never share a seed
//! with test runs.

mod engine;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cigraph::CorrelationMode;
use crate::dataset::{self, Dataset, MaskSize, Normalization, SyntheticConfig};
use crate::embed::{ClassifierConfig, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::propagate::{PropagationConfig, Regularizer};

pub use engine::{Experiment, RunOutcome};
pub use report::{
    CellReport, ExperimentReport, GridPoint, MaskSweepPoint, MaskSweepReport, RunRecord, Summary,
    ThresholdRow, ThresholdSweepReport,
};

/// Where the experiment's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetRef {
    Cora { path: PathBuf },
    Pubmed { path: PathBuf },
    Json { path: PathBuf },
    Synthetic {
        #[serde(default)]
        config: SyntheticConfig,
    },
}

impl DatasetRef {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetRef::Cora { path } => dataset::load_cora(path),
            DatasetRef::Pubmed { path } => dataset::load_pubmed(path),
            DatasetRef::Json { path } => dataset::load_dataset_json(path),
            DatasetRef::Synthetic { config } => dataset::synthetic(config),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Node2vec,
    IterativeExp,
    IterativePos,
    IterativePosneg,
    AnalyticalExp,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Node2vec,
        Method::IterativeExp,
        Method::IterativePos,
        Method::IterativePosneg,
        Method::AnalyticalExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Node2vec => "node2vec",
            Method::IterativeExp => "iterative-exp",
            Method::IterativePos => "iterative-pos",
            Method::IterativePosneg => "iterative-posneg",
            Method::AnalyticalExp => "analytical-exp",
        }
    }

    fn uses_alpha(self) -> bool {
        matches!(self, Method::Node2vec | Method::IterativeExp | Method::AnalyticalExp)
    }

    fn uses_regularizer(self) -> bool {
        matches!(self, Method::IterativePos | Method::IterativePosneg)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// Which seed range the reported runs are drawn from. Hyperparameters are
/// always selected on the validation range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitPolicy {
    Validation,
    Test,
}

/// Whether each run draws a fresh node subset or all runs share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resample {
    PerRun,
    Once,
}

impl std::str::FromStr for Resample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-run" => Ok(Resample::PerRun),
            "once" => Ok(Resample::Once),
            _ => Err(Error::InvalidArgument(format!("unknown resample mode {s:?}"))),
        }
    }
}

/// One point of the hyperparameter space. Fields a method ignores are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub shrinkage: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<Regularizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub alpha: Vec<f64>,
    pub shrinkage: Vec<f64>,
    pub regularizer: Vec<Regularizer>,
    pub embedding_dim: Vec<usize>,
    /// Confidence thresholds for threshold sweeps; empty means eleven evenly
    /// spaced values from `1/C` to the largest attainable confidence.
    pub thresholds: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            alpha: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            shrinkage: vec![0.05, 0.1, 0.2, 0.4],
            regularizer: vec![Regularizer::Kl, Regularizer::Wasserstein],
            embedding_dim: vec![64],
            thresholds: Vec::new(),
        }
    }
}

impl Grids {
    /// Grid points for `method`, shrinkage outermost.
    pub fn points(&self, method: Method) -> Vec<Hyperparameters> {
        let mut out = Vec::new();
        for &shrinkage in &self.shrinkage {
            match method {
                Method::IterativeExp | Method::AnalyticalExp => {
                    for &a in &self.alpha {
                        out.push(Hyperparameters {
                            shrinkage,
                            alpha: Some(a),
                            regularizer: None,
                            embedding_dim: None,
                        });
                    }
                }
                Method::IterativePos | Method::IterativePosneg => {
                    for &r in &self.regularizer {
                        out.push(Hyperparameters {
                            shrinkage,
                            alpha: None,
                            regularizer: Some(r),
                            embedding_dim: None,
                        });
                    }
                }
                Method::Node2vec => {
                    for &a in &self.alpha {
                        for &e in &self.embedding_dim {
                            out.push(Hyperparameters {
                                shrinkage,
                                alpha: Some(a),
                                regularizer: None,
                                embedding_dim: Some(e),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

fn default_masking() -> Vec<MaskSize> {
    vec![MaskSize::Fraction(0.2), MaskSize::Fraction(0.4), MaskSize::Fraction(0.6)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dataset: DatasetRef,
    /// Nodes per run; the whole dataset is used when it has fewer nodes.
    pub subset_size: usize,
    pub stratified: bool,
    pub normalization: Normalization,
    pub correlation: CorrelationMode,
    /// Partial correlations with smaller magnitude are zeroed.
    pub sparsity: f64,
    pub masking: Vec<MaskSize>,
    pub methods: Vec<Method>,
    pub runs: usize,
    pub validation_runs: usize,
    pub grids: Grids,
    pub split: SplitPolicy,
    pub resample: Resample,
    pub seed: u64,
    pub propagation: PropagationConfig,
    pub embedding: EmbeddingConfig,
    pub classifier: ClassifierConfig,
    /// Fixed hyperparameters; methods listed here skip the grid search.
    pub hyperparameters: BTreeMap<Method, Hyperparameters>,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            dataset: DatasetRef::Synthetic {
                config: SyntheticConfig::default(),
            },
            subset_size: 300,
            stratified: false,
            normalization: Normalization::None,
            correlation: CorrelationMode::Pearson,
            sparsity: 0.0,
            masking: default_masking(),
            methods: Method::ALL.to_vec(),
            runs: 50,
            validation_runs: 20,
            grids: Grids::default(),
            split: SplitPolicy::Test,
            resample: Resample::PerRun,
            seed: 0,
            propagation: PropagationConfig::default(),
            embedding: EmbeddingConfig::default(),
            classifier: ClassifierConfig::default(),
            hyperparameters: BTreeMap::new(),
            workers: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.runs == 0 {
            return bad("runs must be ≥ 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.masking.is_empty() {
            return bad("masking levels must not be empty".into());
        }
        if self.subset_size < 2 {
            return bad("subset_size must be ≥ 2".into());
        }
        if !(self.sparsity >= 0.0 && self.sparsity < 1.0) {
            return bad(format!("sparsity {} outside [0, 1)", self.sparsity));
        }
        for level in &self.masking {
            if let MaskSize::Fraction(f) = level {
                if !(*f > 0.0 && *f < 1.0) {
                    return bad(format!("masking fraction {f} outside (0, 1)"));
                }
            }
        }
        self.propagation.validate()?;
        self.embedding.validate()?;
        self.classifier.validate()?;
        let g = &self.grids;
        if g.shrinkage.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("shrinkage grid values must lie in [0, 1]".into());
        }
        if g.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("alpha grid values must be finite and ≥ 0".into());
        }
        if g.embedding_dim.contains(&0) {
            return bad("embedding dimensions must be ≥ 1".into());
        }
        for &m in &self.methods {
            if self.hyperparameters.contains_key(&m) {
                continue;
            }
            if self.validation_runs == 0 {
                return bad(format!("{m} needs validation_runs ≥ 1 for the grid search"));
            }
            if g.points(m).is_empty() {
                return bad(format!("empty hyperparameter grid for {m}"));
            }
        }
        for (m, hp) in &self.hyperparameters {
            check_hyperparameters(*m, hp)?;
        }
        Ok(())
    }
}

fn check_hyperparameters(m: Method, hp: &Hyperparameters) -> Result<()> {
    if !(0.0..=1.0).contains(&hp.shrinkage) {
        return Err(Error::InvalidArgument(format!("{m}: shrinkage outside [0, 1]")));
    }
    if m.uses_alpha() && hp.alpha.is_none() {
        return Err(Error::InvalidArgument(format!("{m}: alpha is required")));
    }
    if m.uses_regularizer() && hp.regularizer.is_none() {
        return Err(Error::InvalidArgument(format!("{m}: regularizer is required")));
    }
    if m == Method::Node2vec && hp.embedding_dim.is_none() {
        return Err(Error::InvalidArgument(format!("{m}: embedding_dim is required")));
    }
    Ok(())
}
