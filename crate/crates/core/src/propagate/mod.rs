//! Label propagation over transition matrices.
//!
//! All methods share the same state: a `D × C` matrix of per-node category
//! distributions whose known rows are clamped. Iterative methods repeat a
//! diffusion step until the squared Frobenius change drops to `epsilon`;
//! [`analytical`] solves the fixed point directly:
//!
//! ```text
//! (I - P_UU) n_U = P_UK n_K
//! ```

mod regularizer;
mod select;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::KnownMask;
use crate::error::{Error, Result};
use crate::transition::{TransitionKind, TransitionMatrix};

pub use regularizer::{regularizer_term, Regularizer, PROBABILITY_FLOOR};
pub use select::{coverage, select, select_rows, softmax, Prediction, Selection};

const DISTRIBUTION_TOL: f64 = 1e-9;

/// Per-node category distributions plus the known/unknown split.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelState {
    dist: DMatrix<f64>,
    mask: KnownMask,
}

impl LabelState {
    /// Checks that every row is a probability distribution.
    pub fn from_parts(dist: DMatrix<f64>, mask: KnownMask) -> Result<Self> {
        if dist.nrows() != mask.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "{} distribution rows for {} nodes",
                dist.nrows(),
                mask.num_nodes()
            )));
        }
        if dist.ncols() < 1 {
            return Err(Error::InvalidArgument("need at least one category".into()));
        }
        for (i, row) in dist.row_iter().enumerate() {
            check_distribution(row.iter().copied(), i)?;
        }
        Ok(Self { dist, mask })
    }

    pub fn distributions(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn mask(&self) -> &KnownMask {
        &self.mask
    }

    pub fn num_nodes(&self) -> usize {
        self.dist.nrows()
    }

    pub fn num_categories(&self) -> usize {
        self.dist.ncols()
    }

    /// Replaces the unknown rows (in `mask.unknown()` order) with another
    /// starting distribution.
    pub fn with_unknown_rows(mut self, rows: &DMatrix<f64>) -> Result<Self> {
        let unknown = self.mask.unknown();
        if rows.nrows() != unknown.len() || rows.ncols() != self.num_categories() {
            return Err(Error::InvalidArgument(format!(
                "expected a {}×{} block of unknown rows",
                unknown.len(),
                self.num_categories()
            )));
        }
        for (r, &node) in unknown.iter().enumerate() {
            check_distribution(rows.row(r).iter().copied(), node)?;
            self.dist.row_mut(node).copy_from(&rows.row(r));
        }
        Ok(self)
    }

    fn block(&self, nodes: &[usize]) -> DMatrix<f64> {
        self.dist.select_rows(nodes)
    }

    fn require_known(&self) -> Result<()> {
        if self.mask.known().is_empty() {
            return Err(Error::InvalidArgument(
                "no known node: every connected component needs a label".into(),
            ));
        }
        Ok(())
    }
}

fn check_distribution(row: impl Iterator<Item = f64>, node: usize) -> Result<()> {
    let mut sum = 0.0;
    for v in row {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "node {node}: distribution entries must be finite and ≥ 0"
            )));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidArgument(format!(
            "node {node}: distribution sums to {sum}"
        )));
    }
    Ok(())
}

/// What is known about a labelled node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodePrior {
    /// Delta distribution on one category.
    Category(usize),
    /// Arbitrary user-supplied distribution.
    Distribution(Vec<f64>),
}

/// Known rows from `priors` (aligned with `mask.known()`), unknown rows
/// uniform.
pub fn init_state(mask: &KnownMask, priors: &[NodePrior], categories: usize) -> Result<LabelState> {
    if categories == 0 {
        return Err(Error::InvalidArgument("need at least one category".into()));
    }
    if mask.known().is_empty() {
        return Err(Error::InvalidArgument(
            "no known node: every connected component needs a label".into(),
        ));
    }
    if priors.len() != mask.known().len() {
        return Err(Error::InvalidArgument(format!(
            "{} priors for {} known nodes",
            priors.len(),
            mask.known().len()
        )));
    }
    let mut dist = DMatrix::from_element(mask.num_nodes(), categories, 1.0 / categories as f64);
    for (&node, prior) in mask.known().iter().zip(priors) {
        let mut row = dist.row_mut(node);
        match prior {
            NodePrior::Category(c) => {
                if *c >= categories {
                    return Err(Error::InvalidArgument(format!(
                        "node {node}: category {c} out of range"
                    )));
                }
                row.fill(0.0);
                row[*c] = 1.0;
            }
            NodePrior::Distribution(p) => {
                if p.len() != categories {
                    return Err(Error::InvalidArgument(format!(
                        "node {node}: distribution has {} entries, expected {categories}",
                        p.len()
                    )));
                }
                check_distribution(p.iter().copied(), node)?;
                for (slot, v) in row.iter_mut().zip(p) {
                    *slot = *v;
                }
            }
        }
    }
    Ok(LabelState {
        dist,
        mask: mask.clone(),
    })
}

/// Delta priors taken from a full label vector (one label per node).
pub fn init_from_labels(mask: &KnownMask, labels: &[usize], categories: usize) -> Result<LabelState> {
    if labels.len() != mask.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} nodes",
            labels.len(),
            mask.num_nodes()
        )));
    }
    let priors: Vec<NodePrior> = mask
        .known()
        .iter()
        .map(|&k| NodePrior::Category(labels[k]))
        .collect();
    init_state(mask, &priors, categories)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    /// Stop once the squared Frobenius change of one step is ≤ epsilon.
    pub epsilon: f64,
    pub max_iters: usize,
    pub regularizer: Regularizer,
    pub selection: Selection,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iters: 1000,
            regularizer: Regularizer::Kl,
            selection: Selection::Argmax,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon {} must be > 0", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Change between consecutive iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDelta {
    /// `‖n^t − n^{t−1}‖²_F`, the stopping metric.
    pub squared_frobenius: f64,
    /// Max absolute row sum of the change (the norm the contraction bound
    /// holds in).
    pub max_row_sum: f64,
}

#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub state: LabelState,
    /// Number of update steps performed.
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<StepDelta>,
    /// Unknown nodes whose positive transition row is empty.
    pub stalled: Vec<usize>,
}

fn require_kind(t: &TransitionMatrix, kind: TransitionKind, n: usize) -> Result<()> {
    if t.kind() != kind {
        return Err(Error::InvalidArgument(format!(
            "expected a {kind:?} transition matrix, got {:?}",
            t.kind()
        )));
    }
    if t.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "transition matrix is {}×{}, state has {n} nodes",
            t.dim(),
            t.dim()
        )));
    }
    Ok(())
}

fn step_delta(new: &DMatrix<f64>, old: &DMatrix<f64>) -> StepDelta {
    let diff = new - old;
    StepDelta {
        squared_frobenius: diff.norm_squared(),
        max_row_sum: diff
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
    }
}

fn assemble(state: &LabelState, unknown_rows: &DMatrix<f64>) -> LabelState {
    let mut dist = state.dist.clone();
    for (r, &node) in state.mask.unknown().iter().enumerate() {
        dist.row_mut(node).copy_from(&unknown_rows.row(r));
    }
    LabelState {
        dist,
        mask: state.mask.clone(),
    }
}

/// Diffusion with the exponential transition matrix:
/// `n_U ← P_UU n_U + P_UK n_K`, known rows clamped.
pub fn iterate_exp(
    pe: &TransitionMatrix,
    state: &LabelState,
    cfg: &PropagationConfig,
) -> Result<IterationOutcome> {
    cfg.validate()?;
    require_kind(pe, TransitionKind::Exp, state.num_nodes())?;
    state.require_known()?;
    let known = state.mask.known();
    let unknown = state.mask.unknown();
    if unknown.is_empty() {
        return Ok(IterationOutcome {
            state: state.clone(),
            iterations: 0,
            converged: true,
            trace: Vec::new(),
            stalled: Vec::new(),
        });
    }
    let p_u = pe.matrix().select_rows(unknown);
    let p_uu = p_u.select_columns(unknown);
    let inflow = p_u.select_columns(known) * state.block(known);

    let mut current = state.block(unknown);
    let mut trace = Vec::new();
    let mut converged = false;
    while trace.len() < cfg.max_iters {
        let next = &p_uu * &current + &inflow;
        let delta = step_delta(&next, &current);
        trace.push(delta);
        current = next;
        if delta.squared_frobenius <= cfg.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("iterate_exp stopped after {} steps without converging", trace.len());
    }
    Ok(IterationOutcome {
        state: assemble(state, &current),
        iterations: trace.len(),
        converged,
        trace,
        stalled: Vec::new(),
    })
}

/// Diffusion over the positive transition matrix with regularization
/// against the starting distribution of the unknown rows:
///
/// ```text
/// q⁺ = (P⁺ n)_U,  q⁻ = (P⁻ n)_U
/// n_U ← q⁺ + R(n⁰_U, q⁺) + R(n⁰_U, q⁻)
/// ```
///
/// followed by clamping at zero and row renormalization. `R` is the
/// element-wise regularizer selected in `cfg`; with `Regularizer::None` both
/// terms vanish. The `q⁻` term is dropped when `pneg` is `None`.
pub fn iterate_posneg(
    ppos: &TransitionMatrix,
    pneg: Option<&TransitionMatrix>,
    state: &LabelState,
    cfg: &PropagationConfig,
) -> Result<IterationOutcome> {
    cfg.validate()?;
    require_kind(ppos, TransitionKind::Pos, state.num_nodes())?;
    if let Some(pneg) = pneg {
        require_kind(pneg, TransitionKind::Neg, state.num_nodes())?;
    }
    state.require_known()?;
    let unknown = state.mask.unknown();
    let stalled: Vec<usize> = unknown
        .iter()
        .copied()
        .filter(|&u| ppos.matrix().row(u).iter().all(|&v| v == 0.0))
        .collect();
    if !stalled.is_empty() {
        log::warn!("{} unknown nodes have no positive neighbors", stalled.len());
    }
    if unknown.is_empty() {
        return Ok(IterationOutcome {
            state: state.clone(),
            iterations: 0,
            converged: true,
            trace: Vec::new(),
            stalled,
        });
    }

    let pos_u = ppos.matrix().select_rows(unknown);
    let neg_u = pneg.map(|m| m.matrix().select_rows(unknown));
    let start = state.block(unknown);
    let mut full = state.dist.clone();
    let mut current = start.clone();
    let mut trace = Vec::new();
    let mut converged = false;

    while trace.len() < cfg.max_iters {
        let q_pos = &pos_u * &full;
        let mut next = q_pos.clone();
        if cfg.regularizer != Regularizer::None {
            next += regularizer_term(&start, &q_pos, cfg.regularizer);
            if let Some(neg_u) = &neg_u {
                let q_neg = neg_u * &full;
                next += regularizer_term(&start, &q_neg, cfg.regularizer);
            }
        }
        renormalize_rows(&mut next, &current);

        let delta = step_delta(&next, &current);
        trace.push(delta);
        current = next;
        for (r, &node) in unknown.iter().enumerate() {
            full.row_mut(node).copy_from(&current.row(r));
        }
        if delta.squared_frobenius <= cfg.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("iterate_posneg stopped after {} steps without converging", trace.len());
    }
    Ok(IterationOutcome {
        state: assemble(state, &current),
        iterations: trace.len(),
        converged,
        trace,
        stalled,
    })
}

/// [`iterate_posneg`] without the negative-matrix term.
pub fn iterate_pos(
    ppos: &TransitionMatrix,
    state: &LabelState,
    cfg: &PropagationConfig,
) -> Result<IterationOutcome> {
    iterate_posneg(ppos, None, state, cfg)
}

/// Clamps at zero and rescales each row to sum to one. A row left with no
/// mass keeps its previous value.
fn renormalize_rows(rows: &mut DMatrix<f64>, previous: &DMatrix<f64>) {
    for (r, mut row) in rows.row_iter_mut().enumerate() {
        row.apply(|v| *v = v.max(0.0));
        let s = row.sum();
        if s > 0.0 && s.is_finite() {
            row /= s;
        } else {
            row.copy_from(&previous.row(r));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticalDiagnostics {
    /// Max row sum of `P_UU`; bounds its spectral radius.
    pub mu: f64,
    /// `‖(I − P_UU) n_U − P_UK n_K‖_F`.
    pub solve_residual: f64,
    /// Steps the iterative method would need for `mu^t` to drop below 1e-6.
    pub iterations_equivalent: usize,
}

/// Max row sum of the unknown-unknown block of `pe`.
pub fn contraction_bound(pe: &TransitionMatrix, mask: &KnownMask) -> f64 {
    let unknown = mask.unknown();
    unknown
        .iter()
        .map(|&i| unknown.iter().map(|&j| pe.matrix()[(i, j)]).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Closed-form limit of [`iterate_exp`] via an LU solve of
/// `(I − P_UU) n_U = P_UK n_K`.
pub fn analytical(
    pe: &TransitionMatrix,
    state: &LabelState,
) -> Result<(LabelState, AnalyticalDiagnostics)> {
    require_kind(pe, TransitionKind::Exp, state.num_nodes())?;
    state.require_known()?;
    let known = state.mask.known();
    let unknown = state.mask.unknown();
    if unknown.is_empty() {
        let diag = AnalyticalDiagnostics {
            mu: 0.0,
            solve_residual: 0.0,
            iterations_equivalent: 0,
        };
        return Ok((state.clone(), diag));
    }

    let mu = contraction_bound(pe, &state.mask);
    if !(mu < 1.0) {
        return Err(Error::Numerical(format!(
            "unknown block has row sum {mu} ≥ 1; transition matrix is degenerate"
        )));
    }
    let p_u = pe.matrix().select_rows(unknown);
    let p_uu = p_u.select_columns(unknown);
    let rhs = p_u.select_columns(known) * state.block(known);
    let n_u = DMatrix::<f64>::identity(unknown.len(), unknown.len()) - &p_uu;
    let solution = n_u
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("I − P_UU is singular".into()))?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("linear solve produced non-finite values".into()));
    }
    let solve_residual = (&n_u * &solution - &rhs).norm();
    let iterations_equivalent = if mu > 0.0 {
        (1e-6f64.ln() / mu.ln()).ceil().max(1.0) as usize
    } else {
        1
    };
    Ok((
        assemble(state, &solution),
        AnalyticalDiagnostics {
            mu,
            solve_residual,
            iterations_equivalent,
        },
    ))
}
