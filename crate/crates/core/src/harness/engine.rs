use std::collections::HashMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::report::DatasetInfo;
use super::{
    check_hyperparameters, CellReport, ExperimentReport, ExperimentSpec, GridPoint, Hyperparameters,
    MaskSweepPoint, MaskSweepReport, Method, Resample, RunRecord, SplitPolicy, Summary, ThresholdRow,
    ThresholdSweepReport,
};
use crate::cigraph::{covariance, partial_correlation, shrink, CovarianceMatrix, PartialCorrelationMatrix};
use crate::dataset::{self, normalize, random_mask, Dataset, KnownMask, MaskSize};
use crate::embed::{self, ClassifierConfig, EmbeddingConfig, NodeEmbeddings};
use crate::error::{Error, Result};
use crate::propagate::{self, init_from_labels, select_rows, Selection};
use crate::seed;
use crate::transition::{build_exp, build_maxnorm, split_pos_neg, TransitionConfig};

const VALIDATION_TAG: u64 = 1 << 63;
const SUBSET_STREAM: u64 = 1;
const EMBEDDING_STREAM: u64 = 2;
const CLASSIFIER_STREAM: u64 = 3;
const MASK_STREAM: u64 = 4;
/// Stream for the shared subset under `Resample::Once`.
const SHARED_SUBSET_STREAM: u64 = u64::MAX;

/// A loaded dataset plus the experiment spec that drives every operation.
#[derive(Debug, Clone)]
pub struct Experiment {
    spec: ExperimentSpec,
    data: Dataset,
}

/// Unknown-node distributions from one evaluation.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// `|U| × C`, rows in `unknown` order.
    pub distributions: DMatrix<f64>,
    /// Unknown node indices within the run's subset.
    pub unknown: Vec<usize>,
    pub truth: Vec<usize>,
    pub node_ids: Vec<String>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
}

#[derive(Debug, Clone)]
struct Job {
    method: Method,
    hp: Hyperparameters,
    level: MaskSize,
}

struct Prepared {
    subset: Dataset,
    correlation: CovarianceMatrix,
}

#[derive(Clone, Copy)]
struct RunSeeds {
    base: u64,
    subset: u64,
}

type EmbeddingKey = (u64, u64, usize);

impl Experiment {
    /// Validates the experiment spec and loads (and normalizes) its dataset.
    pub fn new(spec: ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let data = spec.dataset.load()?;
        Self::from_dataset(spec, data)
    }

    /// Uses `data` in place of `spec.dataset`.
    pub fn from_dataset(spec: ExperimentSpec, data: Dataset) -> Result<Self> {
        spec.validate()?;
        let data = normalize(&data, spec.normalization);
        let exp = Self { spec, data };
        for level in &exp.spec.masking {
            level.unknown_count(exp.subset_size())?;
        }
        Ok(exp)
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn subset_size(&self) -> usize {
        self.spec.subset_size.min(self.data.num_nodes())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.spec.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
    }

    fn seeds(&self, split: SplitPolicy, run: usize) -> RunSeeds {
        let tag = match split {
            SplitPolicy::Validation => VALIDATION_TAG,
            SplitPolicy::Test => 0,
        };
        let base = seed::derive(self.spec.seed, tag | run as u64);
        let subset = match self.spec.resample {
            Resample::PerRun => seed::derive(base, SUBSET_STREAM),
            Resample::Once => seed::derive(self.spec.seed, SHARED_SUBSET_STREAM),
        };
        RunSeeds { base, subset }
    }

    fn mask_seed(seeds: RunSeeds, level: MaskSize) -> u64 {
        let key = match level {
            MaskSize::Fraction(f) => f.to_bits(),
            MaskSize::Count(c) => seed::mix(c as u64),
        };
        seed::derive(seed::derive(seeds.base, MASK_STREAM), key)
    }

    fn prepare(&self, seeds: RunSeeds) -> Result<Prepared> {
        let size = self.subset_size();
        let subset = if size == self.data.num_nodes() {
            self.data.clone()
        } else if self.spec.stratified {
            dataset::subsample_stratified(&self.data, size, seeds.subset)?
        } else {
            dataset::subsample(&self.data, size, seeds.subset)?
        };
        let correlation = covariance(subset.features(), self.spec.correlation)?;
        Ok(Prepared { subset, correlation })
    }

    fn partial(&self, prepared: &Prepared, shrinkage: f64) -> Result<PartialCorrelationMatrix> {
        let p = partial_correlation(&shrink(&prepared.correlation, shrinkage)?)?;
        Ok(if self.spec.sparsity > 0.0 {
            p.sparsify(self.spec.sparsity)
        } else {
            p
        })
    }

    fn embedding_config(&self, hp: &Hyperparameters, seeds: RunSeeds) -> EmbeddingConfig {
        EmbeddingConfig {
            dimension: hp.embedding_dim.unwrap_or(self.spec.embedding.dimension),
            seed: seed::derive(seeds.base, EMBEDDING_STREAM),
            ..self.spec.embedding.clone()
        }
    }

    fn evaluate(
        &self,
        prepared: &Prepared,
        p: &PartialCorrelationMatrix,
        job: &Job,
        seeds: RunSeeds,
        embeddings: &mut HashMap<EmbeddingKey, NodeEmbeddings>,
    ) -> Result<RunOutcome> {
        let subset = &prepared.subset;
        let mask = random_mask(subset.num_nodes(), job.level, Self::mask_seed(seeds, job.level))?;
        let c = subset.num_categories();
        let state = init_from_labels(&mask, subset.labels(), c)?;
        let alpha = || TransitionConfig::new(job.hp.alpha.unwrap_or(TransitionConfig::default().alpha));
        let mut prop = self.spec.propagation.clone();
        if let Some(r) = job.hp.regularizer {
            prop.regularizer = r;
        }

        let (distributions, iterations, converged) = match job.method {
            Method::IterativeExp => {
                let out = propagate::iterate_exp(&build_exp(p, alpha()?), &state, &prop)?;
                (unknown_rows(out.state.distributions(), &mask), Some(out.iterations), Some(out.converged))
            }
            Method::AnalyticalExp => {
                let (s, _) = propagate::analytical(&build_exp(p, alpha()?), &state)?;
                (unknown_rows(s.distributions(), &mask), None, None)
            }
            Method::IterativePos | Method::IterativePosneg => {
                let (pos, neg) = split_pos_neg(p);
                let neg = (job.method == Method::IterativePosneg).then_some(&neg);
                let out = propagate::iterate_posneg(&pos, neg, &state, &prop)?;
                (unknown_rows(out.state.distributions(), &mask), Some(out.iterations), Some(out.converged))
            }
            Method::Node2vec => {
                let ecfg = self.embedding_config(&job.hp, seeds);
                let a = alpha()?;
                let key = (job.hp.shrinkage.to_bits(), a.alpha.to_bits(), ecfg.dimension);
                if !embeddings.contains_key(&key) {
                    let pm = build_maxnorm(p, a);
                    let corpus = embed::random_walks(&pm, &ecfg)?;
                    embeddings.insert(key, embed::train_embeddings(&corpus, &ecfg)?);
                }
                let emb = &embeddings[&key];
                let ccfg = ClassifierConfig {
                    seed: seed::derive(seeds.base, CLASSIFIER_STREAM),
                    ..self.spec.classifier.clone()
                };
                let (clf, _) = embed::fit_classifier(emb, &mask, subset.labels(), c, &ccfg)?;
                (embed::predict_unknown(&clf, emb, &mask)?, None, None)
            }
        };
        let unknown = mask.unknown().to_vec();
        Ok(RunOutcome {
            distributions,
            truth: unknown.iter().map(|&u| subset.labels()[u]).collect(),
            node_ids: unknown.iter().map(|&u| subset.node_ids()[u].clone()).collect(),
            unknown,
            iterations,
            converged,
        })
    }

    /// Evaluates every job on one seeded run. Partial correlations are
    /// computed once per shrinkage value and embeddings once per
    /// `(shrinkage, alpha, dimension)`.
    fn run_jobs(&self, split: SplitPolicy, run: usize, jobs: &[Job]) -> (RunSeeds, Vec<(Result<RunOutcome>, u64)>) {
        let seeds = self.seeds(split, run);
        let prepared = match self.prepare(seeds) {
            Ok(p) => p,
            Err(e) => {
                let msg = e.to_string();
                let failed = jobs
                    .iter()
                    .map(|_| (Err(Error::Dataset(msg.clone())), 0))
                    .collect();
                return (seeds, failed);
            }
        };
        let mut partials: HashMap<u64, Result<PartialCorrelationMatrix>> = HashMap::new();
        let mut embeddings = HashMap::new();
        let results = jobs
            .iter()
            .map(|job| {
                let start = Instant::now();
                let key = job.hp.shrinkage.to_bits();
                let p = partials
                    .entry(key)
                    .or_insert_with(|| self.partial(&prepared, job.hp.shrinkage));
                let outcome = match p {
                    Ok(p) => self.evaluate(&prepared, p, job, seeds, &mut embeddings),
                    Err(e) => Err(Error::Numerical(e.to_string())),
                };
                (outcome, start.elapsed().as_millis() as u64)
            })
            .collect();
        (seeds, results)
    }

    /// Runs `jobs` over `runs` seeded runs in parallel. Output is indexed
    /// `[run][job]` and independent of the worker count.
    fn run_all(&self, split: SplitPolicy, runs: usize, jobs: &[Job]) -> Result<Vec<(RunSeeds, Vec<(Result<RunOutcome>, u64)>)>> {
        let pool = self.pool()?;
        Ok(pool.install(|| (0..runs).into_par_iter().map(|r| self.run_jobs(split, r, jobs)).collect()))
    }

    fn record(
        &self,
        run: usize,
        seeds: RunSeeds,
        job: &Job,
        outcome: &Result<RunOutcome>,
        selection: Selection,
        keep_predictions: bool,
    ) -> RunRecord {
        let mut rec = RunRecord {
            run,
            subset_seed: seeds.subset,
            mask_seed: Self::mask_seed(seeds, job.level),
            accuracy: None,
            coverage: None,
            iterations: None,
            converged: None,
            nodes: Vec::new(),
            truth: Vec::new(),
            predicted: Vec::new(),
            error: None,
        };
        let out = match outcome {
            Ok(out) => out,
            Err(e) => {
                rec.error = Some(e.to_string());
                return rec;
            }
        };
        rec.iterations = out.iterations;
        rec.converged = out.converged;
        match score(out, selection) {
            Ok((accuracy, coverage, predicted)) => {
                rec.accuracy = accuracy;
                rec.coverage = Some(coverage);
                if keep_predictions {
                    rec.nodes = out.node_ids.clone();
                    rec.truth = out.truth.clone();
                    rec.predicted = predicted;
                }
            }
            Err(e) => rec.error = Some(e.to_string()),
        }
        rec
    }

    /// One seeded run of `method` at `level`, with predictions kept.
    pub fn run_cell(
        &self,
        method: Method,
        hp: &Hyperparameters,
        level: MaskSize,
        split: SplitPolicy,
        run: usize,
    ) -> Result<RunRecord> {
        check_hyperparameters(method, hp)?;
        level.unknown_count(self.subset_size())?;
        let job = Job {
            method,
            hp: hp.clone(),
            level,
        };
        let (seeds, results) = self.run_jobs(split, run, std::slice::from_ref(&job));
        Ok(self.record(run, seeds, &job, &results[0].0, self.spec.propagation.selection, true))
    }

    /// Raw distributions for one seeded run, for callers that apply their
    /// own selection.
    pub fn run_outcome(
        &self,
        method: Method,
        hp: &Hyperparameters,
        level: MaskSize,
        split: SplitPolicy,
        run: usize,
    ) -> Result<RunOutcome> {
        check_hyperparameters(method, hp)?;
        level.unknown_count(self.subset_size())?;
        let job = Job {
            method,
            hp: hp.clone(),
            level,
        };
        let (_, mut results) = self.run_jobs(split, run, std::slice::from_ref(&job));
        results.remove(0).0
    }

    fn grid_for(&self, methods: &[Method], levels: &[MaskSize]) -> Result<Vec<GridPoint>> {
        let mut jobs = Vec::new();
        for &m in methods {
            let points = self.spec.grids.points(m);
            if points.is_empty() {
                return Err(Error::InvalidArgument(format!("empty hyperparameter grid for {m}")));
            }
            for hp in points {
                for &level in levels {
                    jobs.push(Job {
                        method: m,
                        hp: hp.clone(),
                        level,
                    });
                }
            }
        }
        if jobs.is_empty() {
            return Ok(Vec::new());
        }
        if self.spec.validation_runs == 0 {
            return Err(Error::InvalidArgument("grid search needs validation_runs ≥ 1".into()));
        }
        let runs = self.run_all(SplitPolicy::Validation, self.spec.validation_runs, &jobs)?;
        Ok(jobs
            .iter()
            .enumerate()
            .map(|(j, job)| {
                let accuracies: Vec<Option<f64>> = runs
                    .iter()
                    .enumerate()
                    .map(|(r, (seeds, res))| {
                        self.record(r, *seeds, job, &res[j].0, Selection::Argmax, false).accuracy
                    })
                    .collect();
                GridPoint {
                    method: job.method,
                    level: job.level,
                    hyperparameters: job.hp.clone(),
                    summary: Summary::of(accuracies.iter().copied()),
                    accuracies,
                }
            })
            .collect())
    }

    /// Validation accuracy of every grid point for every method without
    /// fixed hyperparameters, at every masking level.
    pub fn grid_search(&self) -> Result<Vec<GridPoint>> {
        let methods: Vec<Method> = self
            .spec
            .methods
            .iter()
            .copied()
            .filter(|m| !self.spec.hyperparameters.contains_key(m))
            .collect();
        self.grid_for(&methods, &self.spec.masking)
    }

    /// Hyperparameters for `method` at one masking level: the fixed ones if
    /// given, else the grid point with the best mean validation accuracy
    /// (ties go to the earliest point).
    pub fn choose(&self, grid: &[GridPoint], method: Method, level: MaskSize) -> Result<Hyperparameters> {
        if let Some(hp) = self.spec.hyperparameters.get(&method) {
            return Ok(hp.clone());
        }
        best_of(grid.iter().filter(|g| g.method == method && g.level == level).map(|g| (&g.hyperparameters, g.summary.mean)))
            .ok_or_else(|| Error::InvalidArgument(format!("no grid results for {method} at {level}")))
    }

    /// Hyperparameters for `method` across all masking levels of the experiment:
    /// the grid point with the best validation accuracy averaged over levels.
    pub fn tune(&self, method: Method) -> Result<Hyperparameters> {
        if let Some(hp) = self.spec.hyperparameters.get(&method) {
            return Ok(hp.clone());
        }
        let grid = self.grid_for(&[method], &self.spec.masking)?;
        let levels = self.spec.masking.len() as f64;
        let points = self.spec.grids.points(method);
        let means = points.iter().map(|hp| {
            let total: f64 = grid
                .iter()
                .filter(|g| &g.hyperparameters == hp)
                .map(|g| g.summary.mean)
                .sum();
            (hp, total / levels)
        });
        best_of(means).ok_or_else(|| Error::InvalidArgument(format!("empty hyperparameter grid for {method}")))
    }

    /// Every method at every masking level: grid search on validation runs,
    /// then `runs` reported runs with the chosen hyperparameters.
    pub fn compare_methods(&self) -> Result<ExperimentReport> {
        let start = Instant::now();
        let grid = self.grid_search()?;
        let mut jobs = Vec::new();
        for &method in &self.spec.methods {
            for &level in &self.spec.masking {
                jobs.push(Job {
                    method,
                    hp: self.choose(&grid, method, level)?,
                    level,
                });
            }
        }
        let runs = self.run_all(self.spec.split, self.spec.runs, &jobs)?;
        let selection = self.spec.propagation.selection;
        let cells = jobs
            .iter()
            .enumerate()
            .map(|(j, job)| {
                let records: Vec<RunRecord> = runs
                    .iter()
                    .enumerate()
                    .map(|(r, (seeds, res))| self.record(r, *seeds, job, &res[j].0, selection, true))
                    .collect();
                CellReport {
                    method: job.method,
                    level: job.level,
                    hyperparameters: job.hp.clone(),
                    summary: Summary::of(records.iter().map(|r| r.accuracy)),
                    runtime_ms: runs.iter().map(|(_, res)| res[j].1).sum(),
                    runs: records,
                }
            })
            .collect();
        Ok(ExperimentReport {
            format: "knowprop-report".into(),
            version: 1,
            spec: self.spec.clone(),
            dataset: DatasetInfo {
                source: self.data.source(),
                nodes: self.data.num_nodes(),
                samples: self.data.num_samples(),
                categories: self.data.categories().to_vec(),
            },
            grid,
            cells,
            runtime_ms: start.elapsed().as_millis() as u64,
        })
    }

    /// Mean accuracy of `method` as a function of the number of masked
    /// nodes.
    pub fn masking_sweep(&self, method: Method, counts: &[usize]) -> Result<MaskSweepReport> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("masking sweep needs at least one count".into()));
        }
        for &c in counts {
            MaskSize::Count(c).unknown_count(self.subset_size())?;
        }
        let start = Instant::now();
        let hp = self.tune(method)?;
        let jobs: Vec<Job> = counts
            .iter()
            .map(|&c| Job {
                method,
                hp: hp.clone(),
                level: MaskSize::Count(c),
            })
            .collect();
        let runs = self.run_all(self.spec.split, self.spec.runs, &jobs)?;
        let selection = self.spec.propagation.selection;
        let points = jobs
            .iter()
            .enumerate()
            .map(|(j, job)| {
                let accuracies: Vec<Option<f64>> = runs
                    .iter()
                    .enumerate()
                    .map(|(r, (seeds, res))| self.record(r, *seeds, job, &res[j].0, selection, false).accuracy)
                    .collect();
                MaskSweepPoint {
                    masked: counts[j],
                    summary: Summary::of(accuracies.iter().copied()),
                    accuracies,
                }
            })
            .collect();
        Ok(MaskSweepReport {
            method,
            hyperparameters: hp,
            points,
            runtime_ms: start.elapsed().as_millis() as u64,
        })
    }

    /// Default thresholds: eleven evenly spaced values from `1/C` to the
    /// largest softmax confidence a distribution row can reach,
    /// `e / (e + C − 1)`.
    pub fn default_thresholds(&self) -> Vec<f64> {
        let c = self.data.num_categories() as f64;
        let lo = 1.0 / c;
        let hi = max_confidence(self.data.num_categories());
        (0..=10).map(|i| lo + (hi - lo) * i as f64 / 10.0).collect()
    }

    /// Pooled coverage and accuracy of `method` at each confidence
    /// threshold, one report per masking level of the experiment.
    pub fn threshold_sweep(&self, method: Method, thresholds: &[f64]) -> Result<Vec<ThresholdSweepReport>> {
        let thresholds = if thresholds.is_empty() {
            if self.spec.grids.thresholds.is_empty() {
                self.default_thresholds()
            } else {
                self.spec.grids.thresholds.clone()
            }
        } else {
            thresholds.to_vec()
        };
        let c = self.data.num_categories() as f64;
        if let Some(t) = thresholds.iter().find(|&&t| !(t + 1e-12 >= 1.0 / c && t <= 1.0)) {
            return Err(Error::InvalidArgument(format!("threshold {t} outside [1/{c}, 1]")));
        }
        let start = Instant::now();
        let hp = self.tune(method)?;
        let jobs: Vec<Job> = self
            .spec
            .masking
            .iter()
            .map(|&level| Job {
                method,
                hp: hp.clone(),
                level,
            })
            .collect();
        let runs = self.run_all(self.spec.split, self.spec.runs, &jobs)?;
        let mut reports = Vec::new();
        for (j, job) in jobs.iter().enumerate() {
            let outcomes: Vec<&RunOutcome> = runs.iter().filter_map(|(_, res)| res[j].0.as_ref().ok()).collect();
            let failed_runs = runs.len() - outcomes.len();
            let mut rows = Vec::new();
            for &threshold in &thresholds {
                let (mut predicted, mut correct, mut unknown) = (0, 0, 0);
                for out in &outcomes {
                    let preds = select_rows(&out.distributions, &out.unknown, Selection::ConfidenceThreshold { threshold })?;
                    unknown += preds.len();
                    for (p, &t) in preds.iter().zip(&out.truth) {
                        if let Some(c) = p.category {
                            predicted += 1;
                            if c == t {
                                correct += 1;
                            }
                        }
                    }
                }
                rows.push(ThresholdRow {
                    threshold,
                    coverage: if unknown > 0 { predicted as f64 / unknown as f64 } else { 0.0 },
                    accuracy: (predicted > 0).then(|| correct as f64 / predicted as f64),
                    predicted,
                    correct,
                    unknown,
                });
            }
            reports.push(ThresholdSweepReport {
                method,
                level: job.level,
                hyperparameters: hp.clone(),
                rows,
                failed_runs,
                runtime_ms: 0,
            });
        }
        let elapsed = start.elapsed().as_millis() as u64;
        for r in &mut reports {
            r.runtime_ms = elapsed;
        }
        Ok(reports)
    }
}

/// Largest softmax probability of a distribution row over `c` categories.
pub(crate) fn max_confidence(c: usize) -> f64 {
    let e = std::f64::consts::E;
    e / (e + c as f64 - 1.0)
}

fn best_of<'a>(points: impl Iterator<Item = (&'a Hyperparameters, f64)>) -> Option<Hyperparameters> {
    let mut best: Option<(&Hyperparameters, f64)> = None;
    for (hp, mean) in points {
        if best.is_none_or(|(_, m)| mean > m) {
            best = Some((hp, mean));
        }
    }
    best.map(|(hp, _)| hp.clone())
}

fn unknown_rows(dist: &DMatrix<f64>, mask: &KnownMask) -> DMatrix<f64> {
    dist.select_rows(mask.unknown())
}

/// `(accuracy, coverage, predictions)` for one outcome.
fn score(out: &RunOutcome, selection: Selection) -> Result<(Option<f64>, f64, Vec<Option<usize>>)> {
    let preds = select_rows(&out.distributions, &out.unknown, selection)?;
    let predicted: Vec<Option<usize>> = preds.iter().map(|p| p.category).collect();
    let n = predicted.len();
    let made = predicted.iter().filter(|p| p.is_some()).count();
    let correct = predicted.iter().zip(&out.truth).filter(|(p, t)| **p == Some(**t)).count();
    let denom = match selection {
        Selection::Argmax => n,
        Selection::ConfidenceThreshold { .. } => made,
    };
    let accuracy = (denom > 0).then(|| correct as f64 / denom as f64);
    let coverage = if n > 0 { made as f64 / n as f64 } else { 1.0 };
    Ok((accuracy, coverage, predicted))
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;

    fn outcome(distributions: DMatrix<f64>, truth: Vec<usize>) -> RunOutcome {
        let n = truth.len();
        RunOutcome {
            distributions,
            unknown: (0..n).collect(),
            node_ids: (0..n).map(|i| i.to_string()).collect(),
            truth,
            iterations: None,
            converged: None,
        }
    }

    #[test]
    fn perfect_predictor_scores_one() {
        let truth = vec![2, 0, 1, 1, 0];
        let dist = DMatrix::from_fn(5, 3, |i, c| if truth[i] == c { 1.0 } else { 0.0 });
        let (acc, cov, _) = score(&outcome(dist, truth), Selection::Argmax).unwrap();
        assert_eq!((acc, cov), (Some(1.0), 1.0));
    }

    #[test]
    fn random_predictor_scores_chance() {
        let mut rng = seed::rng(17);
        let (mut total, runs) = (0.0, 400);
        for _ in 0..runs {
            let truth: Vec<usize> = (0..60).map(|_| rng.random_range(0..7)).collect();
            let dist = DMatrix::from_fn(60, 7, |_, _| rng.random::<f64>());
            let dist = DMatrix::from_fn(60, 7, |i, c| dist[(i, c)] / dist.row(i).sum());
            total += score(&outcome(dist, truth), Selection::Argmax).unwrap().0.unwrap();
        }
        assert!((total / runs as f64 - 1.0 / 7.0).abs() < 0.01);
    }

    #[test]
    fn threshold_accuracy_counts_predicted_only() {
        let dist = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0]);
        let sel = Selection::ConfidenceThreshold { threshold: 0.6 };
        let (acc, cov, pred) = score(&outcome(dist, vec![0, 0, 0]), sel).unwrap();
        assert_eq!(pred, vec![Some(0), None, Some(1)]);
        assert_eq!(acc, Some(0.5));
        assert!((cov - 2.0 / 3.0).abs() < 1e-15);
    }
}
