//! Transition-probability matrices derived from partial correlations.
//!
//! * [`build_exp`]: row-wise softmax of `αP` (every pair gets some mass).
//! * [`split_pos_neg`]: positive and negated-negative parts, each row
//!   normalized; rows without qualifying entries stay all-zero.
//! * [`build_maxnorm`]: `exp(αP)` divided by its global maximum, used as edge
//!   weights for the embedding baseline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cigraph::PartialCorrelationMatrix;
use crate::error::{Error, Result};
use crate::matrix_io::{MatrixFile, MatrixKind};

const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionConfig {
    /// Scaling intensity applied to partial correlations before
    /// exponentiation. Zero is accepted and yields uniform rows.
    pub alpha: f64,
}

impl TransitionConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} must be finite and ≥ 0")));
        }
        Ok(Self { alpha })
    }
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self { alpha: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionKind {
    Exp,
    Pos,
    Neg,
    MaxNorm,
}

impl TransitionKind {
    fn matrix_kind(self) -> MatrixKind {
        match self {
            TransitionKind::Exp => MatrixKind::Exp,
            TransitionKind::Pos => MatrixKind::Pos,
            TransitionKind::Neg => MatrixKind::Neg,
            TransitionKind::MaxNorm => MatrixKind::MaxNorm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    kind: TransitionKind,
    matrix: DMatrix<f64>,
}

impl TransitionMatrix {
    /// Wraps an externally supplied matrix after checking the invariants of
    /// its kind.
    pub fn new(kind: TransitionKind, matrix: DMatrix<f64>) -> Result<Self> {
        let t = Self { kind, matrix };
        t.validate()?;
        Ok(t)
    }

    pub fn kind(&self) -> TransitionKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Rows with no outgoing mass (only possible for `Pos`/`Neg`).
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.matrix.row(i).iter().all(|&v| v == 0.0))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() {
            return Err(Error::Matrix(format!("{}×{} matrix is not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Matrix("entries must be finite and nonnegative".into()));
        }
        match self.kind {
            TransitionKind::Exp => {
                for (i, row) in m.row_iter().enumerate() {
                    if (row.sum() - 1.0).abs() > ROW_SUM_TOL {
                        return Err(Error::Matrix(format!("row {i} does not sum to 1")));
                    }
                }
            }
            TransitionKind::Pos | TransitionKind::Neg => {
                for (i, row) in m.row_iter().enumerate() {
                    let s = row.sum();
                    if s != 0.0 && (s - 1.0).abs() > ROW_SUM_TOL {
                        return Err(Error::Matrix(format!("row {i} sums to {s}, expected 0 or 1")));
                    }
                    if m[(i, i)] != 0.0 {
                        return Err(Error::Matrix(format!("diagonal entry {i} is not zero")));
                    }
                }
            }
            TransitionKind::MaxNorm => {
                if m.iter().any(|&v| v > 1.0) {
                    return Err(Error::Matrix("max-normalized entries must be ≤ 1".into()));
                }
                if !m.is_empty() && m.max() != 1.0 {
                    return Err(Error::Matrix("max-normalized matrix must attain 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile::new(self.kind.matrix_kind(), self.matrix.clone())
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        let kind = match file.kind {
            MatrixKind::Exp => TransitionKind::Exp,
            MatrixKind::Pos => TransitionKind::Pos,
            MatrixKind::Neg => TransitionKind::Neg,
            MatrixKind::MaxNorm => TransitionKind::MaxNorm,
            other => {
                return Err(Error::Matrix(format!("{other:?} is not a transition matrix")));
            }
        };
        Self::new(kind, file.matrix.clone())
    }
}

/// Row-wise softmax of `αP`, computed with the row maximum subtracted.
pub fn build_exp(p: &PartialCorrelationMatrix, cfg: TransitionConfig) -> TransitionMatrix {
    TransitionMatrix {
        kind: TransitionKind::Exp,
        matrix: row_softmax(p.matrix() * cfg.alpha),
    }
}

fn row_softmax(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    m
}

/// Splits `P` into row-normalized positive and negative parts.
pub fn split_pos_neg(p: &PartialCorrelationMatrix) -> (TransitionMatrix, TransitionMatrix) {
    let d = p.dim();
    let mut pos = DMatrix::zeros(d, d);
    let mut neg = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let v = p.matrix()[(i, j)];
            if i == j {
                continue;
            }
            if v > 0.0 {
                pos[(i, j)] = v;
            } else if v < 0.0 {
                neg[(i, j)] = -v;
            }
        }
    }
    normalize_rows(&mut pos);
    normalize_rows(&mut neg);
    let pos = TransitionMatrix {
        kind: TransitionKind::Pos,
        matrix: pos,
    };
    let neg = TransitionMatrix {
        kind: TransitionKind::Neg,
        matrix: neg,
    };
    for (name, t) in [("positive", &pos), ("negative", &neg)] {
        let zero = t.zero_rows().len();
        if zero > 0 {
            log::warn!("{name} transition matrix has {zero} all-zero rows");
        }
    }
    (pos, neg)
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
}

/// `exp(αP) / max exp(αP)`, evaluated as `exp(αP - max αP)`.
pub fn build_maxnorm(p: &PartialCorrelationMatrix, cfg: TransitionConfig) -> TransitionMatrix {
    let scaled = p.matrix() * cfg.alpha;
    let max = if scaled.is_empty() { 0.0 } else { scaled.max() };
    TransitionMatrix {
        kind: TransitionKind::MaxNorm,
        matrix: scaled.map(|v| (v - max).exp()),
    }
}
