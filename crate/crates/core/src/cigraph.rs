//! Partial-correlation recovery by shrinkage and inversion.
//!
//! `covariance` builds a correlation matrix over the node columns of an
//! observation matrix, `shrink` pulls it toward the identity so it can be
//! inverted, and `partial_correlation` maps the precision matrix to
//! `P_ij = -Θ_ij / sqrt(Θ_ii Θ_jj)`.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_io::{MatrixFile, MatrixKind};

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMode {
    #[default]
    Pearson,
    Spearman,
}

/// Symmetric `D × D` correlation (or covariance) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    shrinkage: f64,
}

impl CovarianceMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_square_symmetric(&matrix)?;
        Ok(Self {
            matrix,
            shrinkage: 0.0,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Total shrinkage applied so far.
    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    matrix: DMatrix<f64>,
}

impl PrecisionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Symmetric matrix of partial correlations with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCorrelationMatrix {
    matrix: DMatrix<f64>,
}

impl PartialCorrelationMatrix {
    /// Validates: square, symmetric within 1e-10, zero diagonal,
    /// off-diagonal entries strictly inside (-1, 1).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_square_symmetric(&matrix)?;
        let d = matrix.nrows();
        for i in 0..d {
            if matrix[(i, i)] != 0.0 {
                return Err(Error::Matrix(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..d {
                let v = matrix[(i, j)];
                if i != j && !(v > -1.0 && v < 1.0) {
                    return Err(Error::Matrix(format!("entry ({i}, {j}) = {v} outside (-1, 1)")));
                }
            }
        }
        Ok(Self { matrix })
    }

    /// Accepts a matrix produced by an external recovery tool. Such tools
    /// commonly put 1 on the diagonal; the diagonal is reset to 0 before
    /// validation.
    pub fn from_external(mut matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.is_square() {
            matrix.fill_diagonal(0.0);
        }
        Self::new(matrix)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Zeroes entries with `|P_ij| < tau`.
    pub fn sparsify(&self, tau: f64) -> Self {
        let mut matrix = self.matrix.clone();
        matrix.apply(|v| {
            if v.abs() < tau {
                *v = 0.0
            }
        });
        Self { matrix }
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile::new(MatrixKind::PartialCorrelation, self.matrix.clone())
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        if file.kind != MatrixKind::PartialCorrelation {
            return Err(Error::Matrix(format!(
                "expected a partial-correlation matrix, found {:?}",
                file.kind
            )));
        }
        Self::from_external(file.matrix.clone())
    }
}

fn check_square_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Matrix(format!("{}×{} matrix is not square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Matrix("non-finite entry".into()));
    }
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::Matrix(format!("not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Correlation matrix between the columns of `x` (`M × D`).
///
/// Constant columns get zero correlation with every other column and 1 on
/// the diagonal.
pub fn covariance(x: &DMatrix<f64>, mode: CorrelationMode) -> Result<CovarianceMatrix> {
    let m = x.nrows();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 observation samples, got {m}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("observations contain non-finite values".into()));
    }
    let mut z = match mode {
        CorrelationMode::Pearson => x.clone(),
        CorrelationMode::Spearman => rank_columns(x),
    };
    for mut col in z.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        } else {
            col.fill(0.0);
        }
    }
    let mut s = z.tr_mul(&z);
    let d = s.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            let v = v.clamp(-1.0, 1.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
        s[(i, i)] = 1.0;
    }
    CovarianceMatrix::new(s)
}

/// Average ranks (1-based) within each column.
fn rank_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    let mut order: Vec<usize> = Vec::with_capacity(x.nrows());
    for (j, col) in x.column_iter().enumerate() {
        order.clear();
        order.extend(0..col.len());
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && col[order[end]] == col[order[start]] {
                end += 1;
            }
            let rank = (start + end + 1) as f64 / 2.0;
            for &i in &order[start..end] {
                out[(i, j)] = rank;
            }
            start = end;
        }
    }
    out
}

/// `(1 - lambda) S + lambda I`.
pub fn shrink(s: &CovarianceMatrix, lambda: f64) -> Result<CovarianceMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("shrinkage {lambda} outside [0, 1]")));
    }
    let d = s.dim();
    let matrix = &s.matrix * (1.0 - lambda) + DMatrix::<f64>::identity(d, d) * lambda;
    Ok(CovarianceMatrix {
        matrix,
        shrinkage: 1.0 - (1.0 - s.shrinkage) * (1.0 - lambda),
    })
}

/// Inverse of a symmetric positive-definite matrix by Cholesky solve.
pub fn precision(s: &CovarianceMatrix) -> Result<PrecisionMatrix> {
    let d = s.dim();
    let chol = Cholesky::new(s.matrix.clone()).ok_or_else(|| {
        Error::Numerical(
            "covariance matrix is not positive definite; apply shrinkage (lambda > 0)".into(),
        )
    })?;
    let mut theta = chol.solve(&DMatrix::identity(d, d));
    let sym = (&theta + theta.transpose()) * 0.5;
    theta.copy_from(&sym);
    Ok(PrecisionMatrix { matrix: theta })
}

pub fn partial_correlation(s: &CovarianceMatrix) -> Result<PartialCorrelationMatrix> {
    partial_from_precision(&precision(s)?)
}

pub fn partial_from_precision(theta: &PrecisionMatrix) -> Result<PartialCorrelationMatrix> {
    let t = &theta.matrix;
    let d = t.nrows();
    let scale: Vec<f64> = (0..d).map(|i| t[(i, i)].sqrt()).collect();
    if scale.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Numerical("precision matrix has a non-positive diagonal".into()));
    }
    let p = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            0.0
        } else {
            -t[(i, j)] / (scale[i] * scale[j])
        }
    });
    PartialCorrelationMatrix::new(p).map_err(|e| {
        Error::Numerical(format!("partial correlations out of range ({e}); increase shrinkage"))
    })
}

/// Full recovery pipeline: correlation, shrinkage, inversion, optional
/// sparsification.
pub fn recover(
    x: &DMatrix<f64>,
    mode: CorrelationMode,
    lambda: f64,
    sparsity: f64,
) -> Result<PartialCorrelationMatrix> {
    let s = shrink(&covariance(x, mode)?, lambda)?;
    let p = partial_correlation(&s)?;
    Ok(if sparsity > 0.0 { p.sparsify(sparsity) } else { p })
}
