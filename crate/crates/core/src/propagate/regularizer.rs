use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Lower clamp applied to `q` before taking logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    None,
    Kl,
    Wasserstein,
}

impl std::fmt::Display for Regularizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regularizer::None => "none",
            Regularizer::Kl => "kl",
            Regularizer::Wasserstein => "wasserstein",
        })
    }
}

/// Element-wise divergence contribution between matching rows of `n0` and
/// `q`; row sums give the scalar divergence.
///
/// * KL: `n0_ic · ln(n0_ic / q_ic)`, zero where `n0_ic = 0`.
/// * Wasserstein: `|F_n0(c) − F_q(c)|` with `F` the cumulative sum over
///   category indices.
///
/// `Regularizer::None` returns zeros.
pub fn regularizer_term(n0: &DMatrix<f64>, q: &DMatrix<f64>, kind: Regularizer) -> DMatrix<f64> {
    assert_eq!(n0.shape(), q.shape(), "regularizer blocks must have equal shape");
    match kind {
        Regularizer::None => DMatrix::zeros(q.nrows(), q.ncols()),
        Regularizer::Kl => n0.zip_map(q, |p, q| {
            if p > 0.0 {
                p * (p / q.max(PROBABILITY_FLOOR)).ln()
            } else {
                0.0
            }
        }),
        Regularizer::Wasserstein => {
            let mut out = DMatrix::zeros(q.nrows(), q.ncols());
            for r in 0..q.nrows() {
                let mut fp = 0.0;
                let mut fq = 0.0;
                for c in 0..q.ncols() {
                    fp += n0[(r, c)];
                    fq += q[(r, c)];
                    out[(r, c)] = (fp - fq).abs();
                }
            }
            out
        }
    }
}
