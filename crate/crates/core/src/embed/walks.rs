use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;

use super::{Adjacency, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::seed;
use crate::transition::{TransitionKind, TransitionMatrix};

/// Walks ordered round by round: all nodes' first walk, then all second
/// walks, and so on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub num_nodes: usize,
    pub walks: Vec<Vec<usize>>,
}

impl WalkCorpus {
    pub fn is_empty(&self) -> bool {
        self.walks.iter().all(|w| w.is_empty())
    }
}

/// Second-order biased walks over the weighted complete graph `Pm`.
///
/// From edge `t → v` the next node `x ≠ v` is drawn with weight
/// `Pm[v][x] · bias`, where bias is `1/p` for `x = t`, `1` when `x` is
/// adjacent to `t` and `1/q` otherwise. Each start node owns an RNG stream
/// derived from the seed, so the corpus does not depend on thread count.
pub fn random_walks(pm: &TransitionMatrix, cfg: &EmbeddingConfig) -> Result<WalkCorpus> {
    cfg.validate()?;
    if pm.kind() != TransitionKind::MaxNorm {
        return Err(Error::InvalidArgument(format!(
            "walks need a MaxNorm matrix, got {:?}",
            pm.kind()
        )));
    }
    let m = pm.matrix();
    let d = m.nrows();
    if m.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::InvalidArgument("walk weights must lie in (0, 1]".into()));
    }
    let adjacent = adjacency(m, cfg.adjacency);

    let per_node: Vec<Vec<Vec<usize>>> = (0..d)
        .into_par_iter()
        .map(|start| {
            let mut rng = seed::rng(seed::derive(cfg.seed, start as u64));
            (0..cfg.walks_per_node)
                .map(|_| walk(m, &adjacent, start, cfg, &mut rng))
                .collect()
        })
        .collect();

    let mut walks = Vec::with_capacity(d * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        for node_walks in &per_node {
            walks.push(node_walks[round].clone());
        }
    }
    Ok(WalkCorpus { num_nodes: d, walks })
}

fn adjacency(m: &DMatrix<f64>, rule: Adjacency) -> DMatrix<bool> {
    let d = m.nrows();
    DMatrix::from_fn(d, d, |t, x| {
        t != x
            && match rule {
                Adjacency::Positive => m[(t, x)] > m[(t, t)],
                Adjacency::Complete => true,
                Adjacency::Floor(f) => m[(t, x)] > f,
            }
    })
}

fn walk(
    m: &DMatrix<f64>,
    adjacent: &DMatrix<bool>,
    start: usize,
    cfg: &EmbeddingConfig,
    rng: &mut seed::Rng,
) -> Vec<usize> {
    let d = m.nrows();
    let mut path = Vec::with_capacity(cfg.walk_length);
    path.push(start);
    if d == 1 {
        path.resize(cfg.walk_length, start);
        return path;
    }
    let mut weights = vec![0.0; d];
    while path.len() < cfg.walk_length {
        let v = *path.last().unwrap();
        let prev = path.len().checked_sub(2).map(|i| path[i]);
        for (x, w) in weights.iter_mut().enumerate() {
            *w = if x == v {
                0.0
            } else {
                let bias = match prev {
                    None => 1.0,
                    Some(t) if x == t => 1.0 / cfg.p,
                    Some(t) if adjacent[(t, x)] => 1.0,
                    Some(_) => 1.0 / cfg.q,
                };
                m[(v, x)] * bias
            };
        }
        path.push(sample(&weights, rng));
    }
    path
}

fn sample(weights: &[f64], rng: &mut seed::Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = i;
            if target < w {
                return i;
            }
            target -= w;
        }
    }
    last
}
