use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LabelState;
use crate::error::{Error, Result};

/// Slack for comparing confidences against thresholds.
const CONFIDENCE_SLACK: f64 = 1e-12;

/// How a category is picked from a node's distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Selection {
    /// Most likely category after a row softmax; ties go to the lowest index.
    Argmax,
    /// As `Argmax`, but abstain unless the softmax probability of the chosen
    /// category is at least `threshold` (in `[1/C, 1]`).
    ConfidenceThreshold { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub node: usize,
    /// `None` means abstain.
    pub category: Option<usize>,
    /// Softmax probability of the best category.
    pub confidence: f64,
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Predictions for the unknown nodes of `state`, in `mask.unknown()` order.
pub fn select(state: &LabelState, strategy: Selection) -> Result<Vec<Prediction>> {
    let unknown = state.mask().unknown();
    let rows = state.distributions().select_rows(unknown);
    select_rows(&rows, unknown, strategy)
}

/// Same as [`select`] for a bare block of rows; `nodes[r]` labels row `r`.
pub fn select_rows(rows: &DMatrix<f64>, nodes: &[usize], strategy: Selection) -> Result<Vec<Prediction>> {
    if rows.nrows() != nodes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows for {} nodes",
            rows.nrows(),
            nodes.len()
        )));
    }
    let c = rows.ncols();
    if let Selection::ConfidenceThreshold { threshold } = strategy {
        let floor = 1.0 / c as f64;
        if !(threshold + CONFIDENCE_SLACK >= floor && threshold <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} outside [1/{c}, 1]"
            )));
        }
    }
    Ok(rows
        .row_iter()
        .zip(nodes)
        .map(|(row, &node)| {
            let values: Vec<f64> = row.iter().copied().collect();
            let probs = softmax(&values);
            let best = argmax(&probs);
            let confidence = probs[best];
            let category = match strategy {
                Selection::Argmax => Some(best),
                Selection::ConfidenceThreshold { threshold } => {
                    (confidence + CONFIDENCE_SLACK >= threshold).then_some(best)
                }
            };
            Prediction {
                node,
                category,
                confidence,
            }
        })
        .collect())
}

/// Fraction of predictions that did not abstain (1 for an empty slice).
pub fn coverage(predictions: &[Prediction]) -> f64 {
    if predictions.is_empty() {
        return 1.0;
    }
    predictions.iter().filter(|p| p.category.is_some()).count() as f64 / predictions.len() as f64
}
