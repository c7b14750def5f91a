use nalgebra::DMatrix;
use rand::Rng as _;

use super::{EmbeddingConfig, NodeEmbeddings, WalkCorpus};
use crate::error::{Error, Result};
use crate::seed;

/// Size of the negative-sampling table per node (unigram^0.75 draw).
const TABLE_PER_NODE: usize = 1000;
/// Learning rate never decays below this fraction of the initial value.
const MIN_LR_FRACTION: f64 = 1e-4;
/// Logit clamp for the sigmoid.
const MAX_LOGIT: f64 = 6.0;

fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-MAX_LOGIT, MAX_LOGIT);
    1.0 / (1.0 + (-x).exp())
}

fn negative_table(corpus: &WalkCorpus) -> Vec<usize> {
    let mut counts = vec![0.0f64; corpus.num_nodes];
    for w in &corpus.walks {
        for &n in w {
            counts[n] += 1.0;
        }
    }
    let powered: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let total: f64 = powered.iter().sum();
    let size = TABLE_PER_NODE * corpus.num_nodes;
    let mut table = Vec::with_capacity(size);
    let mut acc = 0.0;
    let mut node = 0;
    for i in 0..size {
        let pos = (i as f64 + 0.5) / size as f64;
        while node + 1 < powered.len() && acc + powered[node] / total < pos {
            acc += powered[node] / total;
            node += 1;
        }
        table.push(node);
    }
    table
}

/// Skip-gram with negative sampling over the walk corpus.
///
/// Training is single-threaded and visits pairs in corpus order, so the
/// result depends only on the corpus and `cfg.seed`.
pub fn train_embeddings(corpus: &WalkCorpus, cfg: &EmbeddingConfig) -> Result<NodeEmbeddings> {
    cfg.validate()?;
    if corpus.num_nodes == 0 || corpus.is_empty() {
        return Err(Error::InvalidArgument("cannot train embeddings on an empty corpus".into()));
    }
    if corpus.walks.iter().flatten().any(|&n| n >= corpus.num_nodes) {
        return Err(Error::InvalidArgument("walk visits a node outside the corpus".into()));
    }
    let d = corpus.num_nodes;
    let e = cfg.dimension;
    let mut rng = seed::rng(seed::derive(cfg.seed, u64::MAX));
    let mut input: Vec<f64> = (0..d * e)
        .map(|_| (rng.random::<f64>() - 0.5) / e as f64)
        .collect();
    let mut output = vec![0.0f64; d * e];
    let table = negative_table(corpus);

    let pairs_per_epoch: usize = corpus
        .walks
        .iter()
        .map(|w| {
            (0..w.len())
                .map(|i| i.min(cfg.window) + (w.len() - 1 - i).min(cfg.window))
                .sum::<usize>()
        })
        .sum();
    let total_pairs = (pairs_per_epoch * cfg.epochs).max(1);
    let mut seen = 0usize;
    let mut grad = vec![0.0f64; e];

    for _ in 0..cfg.epochs {
        for w in &corpus.walks {
            for (i, &center) in w.iter().enumerate() {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(w.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let lr = cfg.learning_rate
                        * (1.0 - seen as f64 / total_pairs as f64).max(MIN_LR_FRACTION);
                    seen += 1;
                    let context = w[j];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let vin = center * e;
                    for k in 0..=cfg.negative_samples {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let t = table[rng.random_range(0..table.len())];
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let vout = target * e;
                        let dot: f64 = (0..e).map(|c| input[vin + c] * output[vout + c]).sum();
                        let g = lr * (label - sigmoid(dot));
                        for c in 0..e {
                            grad[c] += g * output[vout + c];
                            output[vout + c] += g * input[vin + c];
                        }
                    }
                    for c in 0..e {
                        input[vin + c] += grad[c];
                    }
                }
            }
        }
    }
    NodeEmbeddings::new(DMatrix::from_row_slice(d, e, &input))
}
