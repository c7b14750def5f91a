use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::NodeEmbeddings;
use crate::dataset::KnownMask;
use crate::error::{Error, Result};
use crate::seed;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Early stopping is used only with at least this many known nodes.
const MIN_HOLDOUT_KNOWN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    LogisticRegression,
    Mlp,
}

/// Training objective on the softmax outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    CrossEntropy,
    /// `‖Y − softmax(Z)‖²` averaged over known nodes.
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub loss: Loss,
    pub hidden: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::LogisticRegression,
            loss: Loss::CrossEntropy,
            hidden: 32,
            learning_rate: 0.05,
            l2: 1e-4,
            max_epochs: 300,
            patience: 20,
            holdout_fraction: 0.2,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kind == ClassifierKind::Mlp && self.hidden == 0 {
            return Err(Error::InvalidArgument("MLP needs at least one hidden unit".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("classifier learning_rate must be positive".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidArgument("l2 must be ≥ 0".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidArgument("holdout_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training loss on all known nodes at the end.
    pub final_loss: f64,
    pub epochs_run: usize,
    /// False when training stopped at `max_epochs` without the held-out
    /// loss levelling off.
    pub converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Classifier {
    kind: ClassifierKind,
    categories: usize,
    dimension: usize,
    mean: DVector<f64>,
    scale: DVector<f64>,
    /// LR: `[W (C×E), b (C×1)]`; MLP: `[W1 (H×E), b1, W2 (C×H), b2]`.
    params: Vec<DMatrix<f64>>,
    present: Vec<bool>,
    /// Set when only one class was seen; that class is always predicted.
    constant: Option<usize>,
}

impl Classifier {
    pub fn num_categories(&self) -> usize {
        self.categories
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Class probabilities for each row of raw (unstandardized) features.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "classifier expects {}-dimensional inputs, got {}",
                self.dimension,
                x.ncols()
            )));
        }
        if let Some(c) = self.constant {
            return Ok(DMatrix::from_fn(x.nrows(), self.categories, |_, j| if j == c { 1.0 } else { 0.0 }));
        }
        let xs = standardize(x, &self.mean, &self.scale);
        Ok(forward(self.kind, &self.params, &xs, &self.present).probs)
    }
}

fn standardize(x: &DMatrix<f64>, mean: &DVector<f64>, scale: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - mean[j]) / scale[j])
}

struct Forward {
    hidden_pre: Option<DMatrix<f64>>,
    hidden: Option<DMatrix<f64>>,
    probs: DMatrix<f64>,
}

fn affine(x: &DMatrix<f64>, w: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = x * w.transpose();
    for mut row in z.row_iter_mut() {
        row += b.transpose();
    }
    z
}

fn forward(kind: ClassifierKind, params: &[DMatrix<f64>], x: &DMatrix<f64>, present: &[bool]) -> Forward {
    let (hidden_pre, hidden, logits) = match kind {
        ClassifierKind::LogisticRegression => (None, None, affine(x, &params[0], &params[1])),
        ClassifierKind::Mlp => {
            let pre = affine(x, &params[0], &params[1]);
            let h = pre.map(|v| v.max(0.0));
            let z = affine(&h, &params[2], &params[3]);
            (Some(pre), Some(h), z)
        }
    };
    let mut probs = logits;
    for mut row in probs.row_iter_mut() {
        let max = row
            .iter()
            .zip(present)
            .filter(|(_, &p)| p)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        for (v, &p) in row.iter_mut().zip(present) {
            *v = if p { (*v - max).exp() } else { 0.0 };
        }
        let s = row.sum();
        row /= s;
    }
    Forward {
        hidden_pre,
        hidden,
        probs,
    }
}

fn loss_value(loss: Loss, probs: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let n = probs.nrows() as f64;
    match loss {
        Loss::CrossEntropy => {
            -probs
                .zip_map(y, |p, t| if t > 0.0 { t * p.max(1e-300).ln() } else { 0.0 })
                .sum()
                / n
        }
        Loss::Squared => (probs - y).norm_squared() / n,
    }
}

/// Gradient of the mean loss with respect to the logits.
fn logit_grad(loss: Loss, probs: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = probs.nrows() as f64;
    match loss {
        Loss::CrossEntropy => (probs - y) / n,
        Loss::Squared => {
            let mut g = DMatrix::zeros(probs.nrows(), probs.ncols());
            for i in 0..probs.nrows() {
                let d: Vec<f64> = (0..probs.ncols()).map(|c| 2.0 * (probs[(i, c)] - y[(i, c)])).collect();
                let pd: f64 = (0..probs.ncols()).map(|c| probs[(i, c)] * d[c]).sum();
                for c in 0..probs.ncols() {
                    g[(i, c)] = probs[(i, c)] * (d[c] - pd) / n;
                }
            }
            g
        }
    }
}

fn gradients(
    kind: ClassifierKind,
    params: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    fwd: &Forward,
    dz: &DMatrix<f64>,
    l2: f64,
) -> Vec<DMatrix<f64>> {
    let col_sums = |m: &DMatrix<f64>| DMatrix::from_fn(m.ncols(), 1, |j, _| m.column(j).sum());
    match kind {
        ClassifierKind::LogisticRegression => {
            vec![dz.transpose() * x + &params[0] * l2, col_sums(dz)]
        }
        ClassifierKind::Mlp => {
            let h = fwd.hidden.as_ref().unwrap();
            let pre = fwd.hidden_pre.as_ref().unwrap();
            let dw2 = dz.transpose() * h + &params[2] * l2;
            let db2 = col_sums(dz);
            let dh = (dz * &params[2]).zip_map(pre, |g, p| if p > 0.0 { g } else { 0.0 });
            let dw1 = dh.transpose() * x + &params[0] * l2;
            let db1 = col_sums(&dh);
            vec![dw1, db1, dw2, db2]
        }
    }
}

fn init_params(kind: ClassifierKind, e: usize, c: usize, hidden: usize, rng: &mut seed::Rng) -> Vec<DMatrix<f64>> {
    let mut glorot = |rows: usize, cols: usize| {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..limit))
    };
    match kind {
        ClassifierKind::LogisticRegression => vec![DMatrix::zeros(c, e), DMatrix::zeros(c, 1)],
        ClassifierKind::Mlp => {
            let w1 = glorot(hidden, e);
            let w2 = glorot(c, hidden);
            vec![w1, DMatrix::zeros(hidden, 1), w2, DMatrix::zeros(c, 1)]
        }
    }
}

struct Adam {
    m: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
    t: i32,
}

impl Adam {
    fn new(params: &[DMatrix<f64>]) -> Self {
        let zeros = || params.iter().map(|p| DMatrix::zeros(p.nrows(), p.ncols())).collect();
        Self {
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [DMatrix<f64>], grads: &[DMatrix<f64>], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = &*m * ADAM_BETA1 + g * (1.0 - ADAM_BETA1);
            *v = &*v * ADAM_BETA2 + g.map(|x| x * x) * (1.0 - ADAM_BETA2);
            for i in 0..p.len() {
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

fn one_hot(labels: &[usize], c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), c, |i, j| if labels[i] == j { 1.0 } else { 0.0 })
}

struct Fit {
    params: Vec<DMatrix<f64>>,
    /// Per-epoch held-out loss (empty without a held-out set).
    holdout_losses: Vec<f64>,
    train_loss: f64,
}

fn train(
    cfg: &ClassifierConfig,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    holdout: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    present: &[bool],
    epochs: usize,
    rng: &mut seed::Rng,
) -> Fit {
    let mut params = init_params(cfg.kind, x.ncols(), y.ncols(), cfg.hidden, rng);
    let mut adam = Adam::new(&params);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut holdout_losses = Vec::new();
    for _ in 0..epochs {
        let fwd = forward(cfg.kind, &params, x, present);
        let dz = logit_grad(cfg.loss, &fwd.probs, y);
        let grads = gradients(cfg.kind, &params, x, &fwd, &dz, cfg.l2);
        adam.step(&mut params, &grads, cfg.learning_rate);
        if let Some((hx, hy)) = holdout {
            let l = loss_value(cfg.loss, &forward(cfg.kind, &params, hx, present).probs, hy);
            holdout_losses.push(l);
            if l < best - 1e-9 {
                best = l;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
        }
    }
    let train_loss = loss_value(cfg.loss, &forward(cfg.kind, &params, x, present).probs, y);
    Fit {
        params,
        holdout_losses,
        train_loss,
    }
}

/// Trains a classifier on the known nodes' embeddings.
///
/// `labels` holds one entry per node; only known nodes are read. Classes
/// that never occur among the known nodes get probability zero.
pub fn fit_classifier(
    embeddings: &NodeEmbeddings,
    mask: &KnownMask,
    labels: &[usize],
    categories: usize,
    cfg: &ClassifierConfig,
) -> Result<(Classifier, TrainReport)> {
    cfg.validate()?;
    let d = embeddings.num_nodes();
    if mask.num_nodes() != d || labels.len() != d {
        return Err(Error::InvalidArgument(format!(
            "{d} embeddings, {} mask nodes, {} labels",
            mask.num_nodes(),
            labels.len()
        )));
    }
    if categories < 2 {
        return Err(Error::InvalidArgument("need at least two categories".into()));
    }
    let known = mask.known();
    if known.is_empty() {
        return Err(Error::InvalidArgument("no known nodes to train on".into()));
    }
    let known_labels: Vec<usize> = known.iter().map(|&k| labels[k]).collect();
    if let Some(&bad) = known_labels.iter().find(|&&l| l >= categories) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range")));
    }

    let mut warnings = Vec::new();
    let mut present = vec![false; categories];
    for &l in &known_labels {
        present[l] = true;
    }
    let absent: Vec<usize> = (0..categories).filter(|&c| !present[c]).collect();
    if !absent.is_empty() {
        warnings.push(format!("classes {absent:?} have no known node and will never be predicted"));
    }
    if known.len() < categories {
        warnings.push(format!("only {} known nodes for {categories} classes", known.len()));
    }

    let e = embeddings.dimension();
    let x_raw = embeddings.vectors().select_rows(known);
    let n = known.len() as f64;
    let mean = DVector::from_fn(e, |j, _| x_raw.column(j).sum() / n);
    let scale = DVector::from_fn(e, |j, _| {
        let var = x_raw.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
        if var > 0.0 {
            var.sqrt()
        } else {
            1.0
        }
    });

    let single = present.iter().filter(|&&p| p).count() == 1;
    if single {
        let c = known_labels[0];
        warnings.push(format!("all known nodes share class {c}; classifier is constant"));
        for w in &warnings {
            log::warn!("{w}");
        }
        let clf = Classifier {
            kind: cfg.kind,
            categories,
            dimension: e,
            mean,
            scale,
            params: Vec::new(),
            present,
            constant: Some(c),
        };
        return Ok((
            clf,
            TrainReport {
                final_loss: 0.0,
                epochs_run: 0,
                converged: true,
                warnings,
            },
        ));
    }

    let x = standardize(&x_raw, &mean, &scale);
    let y = one_hot(&known_labels, categories);
    let mut rng = seed::rng(cfg.seed);

    let holdout_count = (known.len() as f64 * cfg.holdout_fraction).round() as usize;
    let (epochs, converged) = if known.len() >= MIN_HOLDOUT_KNOWN && holdout_count >= 1 {
        let mut order: Vec<usize> = (0..known.len()).collect();
        order.shuffle(&mut rng);
        let (held, kept) = order.split_at(holdout_count);
        let fit = train(
            cfg,
            &x.select_rows(kept),
            &y.select_rows(kept),
            Some((&x.select_rows(held), &y.select_rows(held))),
            &present,
            cfg.max_epochs,
            &mut rng,
        );
        let best = fit
            .holdout_losses
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc })
            .0;
        (best + 1, fit.holdout_losses.len() < cfg.max_epochs)
    } else {
        (cfg.max_epochs, true)
    };

    let fit = train(cfg, &x, &y, None, &present, epochs, &mut rng);
    for w in &warnings {
        log::warn!("{w}");
    }
    if !converged {
        log::warn!("classifier hit max_epochs without levelling off");
    }
    let clf = Classifier {
        kind: cfg.kind,
        categories,
        dimension: e,
        mean,
        scale,
        params: fit.params,
        present,
        constant: None,
    };
    Ok((
        clf,
        TrainReport {
            final_loss: fit.train_loss.max(0.0),
            epochs_run: epochs,
            converged,
            warnings,
        },
    ))
}

/// Category distributions for the unknown nodes, in `mask.unknown()` order.
pub fn predict_unknown(clf: &Classifier, embeddings: &NodeEmbeddings, mask: &KnownMask) -> Result<DMatrix<f64>> {
    if embeddings.num_nodes() != mask.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "{} embeddings for {} nodes",
            embeddings.num_nodes(),
            mask.num_nodes()
        )));
    }
    clf.predict_proba(&embeddings.vectors().select_rows(mask.unknown()))
}
