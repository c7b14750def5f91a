use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ExperimentSpec, Hyperparameters, Method};
use crate::dataset::{MaskSize, SourceTag};

/// Outcome of one seeded run of one method at one masking level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub subset_seed: u64,
    pub mask_seed: u64,
    /// Correct predictions over unknown nodes (argmax), or over predicted
    /// nodes when a confidence threshold is in force. `None` if the run
    /// failed.
    pub accuracy: Option<f64>,
    pub coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    /// Unknown node ids, their true categories and the predictions
    /// (`None` = abstained). Empty for grid-search runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truth: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predicted: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    /// Accuracy recomputed from the stored predictions.
    pub fn recompute_accuracy(&self) -> Option<f64> {
        let predicted = self.predicted.iter().filter(|p| p.is_some()).count();
        let correct = self
            .predicted
            .iter()
            .zip(&self.truth)
            .filter(|(p, t)| **p == Some(**t))
            .count();
        let abstained = predicted < self.predicted.len();
        let denom = if abstained { predicted } else { self.predicted.len() };
        (denom > 0).then(|| correct as f64 / denom as f64)
    }
}

/// Mean and sample standard deviation over the successful runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub successful: usize,
    pub failed: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut ok = Vec::new();
        let mut failed = 0;
        for v in values {
            match v {
                Some(v) => ok.push(v),
                None => failed += 1,
            }
        }
        let n = ok.len();
        let mean = if n > 0 { ok.iter().sum::<f64>() / n as f64 } else { 0.0 };
        let std = if n > 1 {
            (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            successful: n,
            failed,
        }
    }
}

/// Validation result for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub method: Method,
    pub level: MaskSize,
    pub hyperparameters: Hyperparameters,
    pub summary: Summary,
    pub accuracies: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: Method,
    pub level: MaskSize,
    pub hyperparameters: Hyperparameters,
    pub summary: Summary,
    pub runs: Vec<RunRecord>,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: SourceTag,
    pub nodes: usize,
    pub samples: usize,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format: String,
    pub version: u32,
    pub spec: ExperimentSpec,
    pub dataset: DatasetInfo,
    pub grid: Vec<GridPoint>,
    pub cells: Vec<CellReport>,
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn cell(&self, method: Method, level: usize) -> Option<&CellReport> {
        let level = self.spec.masking.get(level)?;
        self.cells.iter().find(|c| c.method == method && c.level == *level)
    }

    /// Zeroes every wall-clock field.
    pub fn strip_timing(&mut self) {
        self.runtime_ms = 0;
        for c in &mut self.cells {
            c.runtime_ms = 0;
        }
    }

    /// One row per method and masking level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,level,mean,std,successful,failed,shrinkage,alpha,regularizer,embedding_dim\n");
        for c in &self.cells {
            let hp = &c.hyperparameters;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                c.method,
                level_label(&c.level),
                c.summary.mean,
                c.summary.std,
                c.summary.successful,
                c.summary.failed,
                hp.shrinkage,
                hp.alpha.map(|a| a.to_string()).unwrap_or_default(),
                hp.regularizer.map(|r| r.to_string()).unwrap_or_default(),
                hp.embedding_dim.map(|e| e.to_string()).unwrap_or_default(),
            );
        }
        out
    }
}

fn level_label(level: &MaskSize) -> String {
    match level {
        MaskSize::Fraction(f) => f.to_string(),
        MaskSize::Count(c) => c.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSweepPoint {
    pub masked: usize,
    pub summary: Summary,
    pub accuracies: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSweepReport {
    pub method: Method,
    pub hyperparameters: Hyperparameters,
    pub points: Vec<MaskSweepPoint>,
    pub runtime_ms: u64,
}

impl MaskSweepReport {
    pub fn strip_timing(&mut self) {
        self.runtime_ms = 0;
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("masked,mean,std,successful,failed\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.masked, p.summary.mean, p.summary.std, p.summary.successful, p.summary.failed
            );
        }
        out
    }
}

/// Pooled over all runs: `accuracy = correct / predicted`,
/// `coverage = predicted / unknown`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub coverage: f64,
    /// `None` when nothing was predicted.
    pub accuracy: Option<f64>,
    pub predicted: usize,
    pub correct: usize,
    pub unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweepReport {
    pub method: Method,
    pub level: MaskSize,
    pub hyperparameters: Hyperparameters,
    pub rows: Vec<ThresholdRow>,
    pub failed_runs: usize,
    pub runtime_ms: u64,
}

impl ThresholdSweepReport {
    pub fn strip_timing(&mut self) {
        self.runtime_ms = 0;
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,coverage,accuracy,predicted,correct,unknown\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.threshold,
                r.coverage,
                r.accuracy.map(|a| a.to_string()).unwrap_or_default(),
                r.predicted,
                r.correct,
                r.unknown
            );
        }
        out
    }
}
