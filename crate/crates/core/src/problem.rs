//! JSON problem and result files for one-off propagation runs.
//!
//! A problem names the categories, the node count and the known nodes:
//!
//! ```json
//! {
//!   "format": "knowprop-problem",
//!   "version": 1,
//!   "categories": ["a", "b"],
//!   "nodes": 4,
//!   "node_ids": ["p1", "p2", "p3", "p4"],
//!   "known": [
//!     {"node": 0, "label": "a"},
//!     {"node": 2, "category": 1},
//!     {"node": 3, "distribution": [0.25, 0.75]}
//!   ]
//! }
//! ```
//!
//! Each known entry gives exactly one of `label` (category name),
//! `category` (index) or `distribution`. `node_ids` is optional.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cigraph::PartialCorrelationMatrix;
use crate::dataset::KnownMask;
use crate::embed::{self, ClassifierConfig, EmbeddingConfig, NodeEmbeddings};
use crate::error::{Error, Result};
use crate::harness::Method;
use crate::matrix_io::{MatrixFile, MatrixKind};
use crate::propagate::{
    self, init_state, select_rows, LabelState, NodePrior, Prediction, PropagationConfig,
};
use crate::transition::{build_exp, build_maxnorm, split_pos_neg, TransitionConfig, TransitionMatrix};

const PROBLEM_FORMAT: &str = "knowprop-problem";
const RESULT_FORMAT: &str = "knowprop-result";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownNode {
    pub node: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub format: String,
    pub version: u32,
    pub categories: Vec<String>,
    pub nodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_ids: Option<Vec<String>>,
    pub known: Vec<KnownNode>,
}

impl Problem {
    pub fn new(categories: Vec<String>, nodes: usize, known: Vec<KnownNode>) -> Self {
        Self {
            format: PROBLEM_FORMAT.into(),
            version: 1,
            categories,
            nodes,
            node_ids: None,
            known,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Dataset(msg));
        if self.format != PROBLEM_FORMAT || self.version != 1 {
            return bad(format!("not a {PROBLEM_FORMAT} v1 file"));
        }
        if self.categories.is_empty() {
            return bad("problem lists no categories".into());
        }
        if self.categories.iter().collect::<BTreeSet<_>>().len() != self.categories.len() {
            return bad("duplicate category names".into());
        }
        if self.nodes == 0 {
            return bad("problem has no nodes".into());
        }
        if let Some(ids) = &self.node_ids {
            if ids.len() != self.nodes {
                return bad(format!("{} node ids for {} nodes", ids.len(), self.nodes));
            }
        }
        if self.known.is_empty() {
            return bad("problem has no known nodes".into());
        }
        let mut seen = BTreeSet::new();
        for k in &self.known {
            if k.node >= self.nodes {
                return bad(format!("known node {} out of range", k.node));
            }
            if !seen.insert(k.node) {
                return bad(format!("node {} listed twice", k.node));
            }
            let given = [k.label.is_some(), k.category.is_some(), k.distribution.is_some()];
            if given.iter().filter(|&&g| g).count() != 1 {
                return bad(format!("node {}: give exactly one of label, category, distribution", k.node));
            }
        }
        Ok(())
    }

    pub fn mask(&self) -> Result<KnownMask> {
        let known: Vec<usize> = self.known.iter().map(|k| k.node).collect();
        KnownMask::from_known(self.nodes, &known)
    }

    fn prior(&self, k: &KnownNode) -> Result<NodePrior> {
        if let Some(label) = &k.label {
            let c = self
                .categories
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Error::Dataset(format!("node {}: unknown label {label:?}", k.node)))?;
            return Ok(NodePrior::Category(c));
        }
        if let Some(c) = k.category {
            return Ok(NodePrior::Category(c));
        }
        Ok(NodePrior::Distribution(k.distribution.clone().unwrap_or_default()))
    }

    /// Known rows from the priors, unknown rows uniform.
    pub fn initial_state(&self) -> Result<LabelState> {
        self.validate()?;
        let mask = self.mask()?;
        let mut by_node: Vec<&KnownNode> = self.known.iter().collect();
        by_node.sort_by_key(|k| k.node);
        let priors = by_node.into_iter().map(|k| self.prior(k)).collect::<Result<Vec<_>>>()?;
        init_state(&mask, &priors, self.categories.len())
            .map_err(|e| Error::Dataset(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeResult {
    pub node: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub known: bool,
    pub distribution: Vec<f64>,
    /// Predicted category index; `None` for known nodes and abstentions.
    pub prediction: Option<usize>,
    pub label: Option<String>,
    /// Softmax confidence of the best category (unknown nodes only).
    pub confidence: Option<f64>,
    pub abstain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub format: String,
    pub version: u32,
    pub method: Method,
    pub categories: Vec<String>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    /// Max row sum of the unknown block (exp methods).
    pub mu: Option<f64>,
    /// Residual of the linear solve (analytical method).
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stalled: Vec<usize>,
    pub nodes: Vec<NodeResult>,
}

impl PropagationResult {
    fn assemble(
        problem: &Problem,
        method: Method,
        dist: &DMatrix<f64>,
        mask: &KnownMask,
        preds: &[Prediction],
    ) -> Self {
        let mut nodes: Vec<NodeResult> = (0..problem.nodes)
            .map(|i| NodeResult {
                node: i,
                id: problem.node_ids.as_ref().map(|ids| ids[i].clone()),
                known: mask.is_known(i),
                distribution: dist.row(i).iter().copied().collect(),
                prediction: None,
                label: None,
                confidence: None,
                abstain: false,
            })
            .collect();
        for p in preds {
            let n = &mut nodes[p.node];
            n.prediction = p.category;
            n.label = p.category.map(|c| problem.categories[c].clone());
            n.confidence = Some(p.confidence);
            n.abstain = p.category.is_none();
        }
        Self {
            format: RESULT_FORMAT.into(),
            version: 1,
            method,
            categories: problem.categories.clone(),
            iterations: None,
            converged: None,
            mu: None,
            residual: None,
            stalled: Vec::new(),
            nodes,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `node,id,known,prediction,label,confidence,abstain` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,id,known,prediction,label,confidence,abstain\n");
        for n in &self.nodes {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                n.node,
                n.id.as_deref().unwrap_or(""),
                n.known,
                n.prediction.map(|p| p.to_string()).unwrap_or_default(),
                n.label.as_deref().unwrap_or(""),
                n.confidence.map(|c| c.to_string()).unwrap_or_default(),
                n.abstain
            ));
        }
        out
    }
}

/// Matrices a propagation method can start from.
pub enum GraphInput {
    Partial(PartialCorrelationMatrix),
    Transition(TransitionMatrix),
}

impl GraphInput {
    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        match file.kind {
            MatrixKind::PartialCorrelation => Ok(Self::Partial(PartialCorrelationMatrix::from_file(file)?)),
            MatrixKind::Embeddings => Err(Error::Matrix("expected a graph matrix, got embeddings".into())),
            _ => Ok(Self::Transition(TransitionMatrix::from_file(file)?)),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Self::Partial(p) => p.dim(),
            Self::Transition(t) => t.dim(),
        }
    }

    fn exp(&self, alpha: TransitionConfig) -> Result<TransitionMatrix> {
        match self {
            Self::Partial(p) => Ok(build_exp(p, alpha)),
            Self::Transition(t) if t.kind() == crate::transition::TransitionKind::Exp => Ok(t.clone()),
            Self::Transition(t) => Err(Error::InvalidArgument(format!(
                "exp methods need a partial-correlation or Exp matrix, got {:?}",
                t.kind()
            ))),
        }
    }
}

/// Runs a propagation `method` on `problem`.
pub fn solve(
    problem: &Problem,
    graph: &GraphInput,
    method: Method,
    alpha: TransitionConfig,
    cfg: &PropagationConfig,
) -> Result<PropagationResult> {
    let state = problem.initial_state()?;
    if graph.dim() != problem.nodes {
        return Err(Error::Dataset(format!(
            "matrix has {} nodes, problem has {}",
            graph.dim(),
            problem.nodes
        )));
    }
    let mut iterations = None;
    let mut converged = None;
    let mut mu = None;
    let mut residual = None;
    let mut stalled = Vec::new();
    let out = match method {
        Method::IterativeExp => {
            let pe = graph.exp(alpha)?;
            mu = Some(propagate::contraction_bound(&pe, state.mask()));
            let o = propagate::iterate_exp(&pe, &state, cfg)?;
            iterations = Some(o.iterations);
            converged = Some(o.converged);
            o.state
        }
        Method::AnalyticalExp => {
            let (s, diag) = propagate::analytical(&graph.exp(alpha)?, &state)?;
            mu = Some(diag.mu);
            residual = Some(diag.solve_residual);
            s
        }
        Method::IterativePos | Method::IterativePosneg => {
            let GraphInput::Partial(p) = graph else {
                return Err(Error::InvalidArgument(format!("{method} needs a partial-correlation matrix")));
            };
            let (pos, neg) = split_pos_neg(p);
            let neg = (method == Method::IterativePosneg).then_some(&neg);
            let o = propagate::iterate_posneg(&pos, neg, &state, cfg)?;
            iterations = Some(o.iterations);
            converged = Some(o.converged);
            stalled = o.stalled;
            o.state
        }
        Method::Node2vec => {
            return Err(Error::InvalidArgument("use the embedding pipeline for node2vec".into()));
        }
    };
    let mask = out.mask().clone();
    let rows = out.distributions().select_rows(mask.unknown());
    let preds = select_rows(&rows, mask.unknown(), cfg.selection)?;
    let mut result = PropagationResult::assemble(problem, method, out.distributions(), &mask, &preds);
    result.iterations = iterations;
    result.converged = converged;
    result.mu = mu;
    result.residual = residual;
    result.stalled = stalled;
    Ok(result)
}

/// Embeds the graph and classifies the unknown nodes of `problem`. Known
/// nodes with soft priors are trained on their most likely category.
pub fn solve_embedding(
    problem: &Problem,
    partial: &PartialCorrelationMatrix,
    alpha: TransitionConfig,
    ecfg: &EmbeddingConfig,
    ccfg: &ClassifierConfig,
    selection: propagate::Selection,
) -> Result<(NodeEmbeddings, PropagationResult)> {
    let state = problem.initial_state()?;
    if partial.dim() != problem.nodes {
        return Err(Error::Dataset(format!(
            "matrix has {} nodes, problem has {}",
            partial.dim(),
            problem.nodes
        )));
    }
    let pm = build_maxnorm(partial, alpha);
    let emb = embed::train_embeddings(&embed::random_walks(&pm, ecfg)?, ecfg)?;
    let mask = state.mask().clone();
    let labels: Vec<usize> = state
        .distributions()
        .row_iter()
        .map(|r| r.transpose().argmax().0)
        .collect();
    let (clf, _) = embed::fit_classifier(&emb, &mask, &labels, problem.categories.len(), ccfg)?;
    let rows = embed::predict_unknown(&clf, &emb, &mask)?;
    let preds = select_rows(&rows, mask.unknown(), selection)?;
    let mut dist = state.distributions().clone();
    for (r, &u) in mask.unknown().iter().enumerate() {
        dist.row_mut(u).copy_from(&rows.row(r));
    }
    let result = PropagationResult::assemble(problem, Method::Node2vec, &dist, &mask, &preds);
    Ok((emb, result))
}
