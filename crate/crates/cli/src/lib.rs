//! Command-line front end for `knowprop`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use knowprop::cigraph::{self, CorrelationMode};
use knowprop::dataset::{self, Dataset, MaskSize, Normalization, SyntheticConfig};
use knowprop::embed::{ClassifierConfig, ClassifierKind, EmbeddingConfig, Loss};
use knowprop::harness::{DatasetRef, Experiment, ExperimentSpec, Method, Resample, SplitPolicy};
use knowprop::matrix_io::{MatrixEncoding, MatrixFile};
use knowprop::problem::{solve, solve_embedding, GraphInput, KnownNode, Problem};
use knowprop::propagate::{PropagationConfig, Regularizer, Selection};
use knowprop::transition::TransitionConfig;
use knowprop::{Error, ErrorKind};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "knowprop", version, about = "Attribute propagation over conditional independence graphs")]
pub struct Cli {
    /// Log verbosity (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover a partial-correlation matrix from a dataset.
    Recover(RecoverArgs),
    /// Propagate known labels over a graph matrix.
    Propagate(PropagateArgs),
    /// Embed the graph with biased random walks and classify unknown nodes.
    Embed(EmbedArgs),
    /// Run a full method comparison from an experiment spec.
    Experiment(ExperimentArgs),
    /// Mean accuracy as a function of the number of masked nodes.
    SweepMask(SweepMaskArgs),
    /// Coverage and accuracy as a function of the confidence threshold.
    SweepThreshold(SweepThresholdArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    /// KPMX binary matrix (matrix outputs only).
    Binary,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Source {
    Cora,
    Pubmed,
    Json,
    Synthetic,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    source: Source,
    /// Dataset path (Cora directory or `.content` file, PubMed directory, or JSON container).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Shrinkage intensity λ in [0, 1].
    #[arg(long, default_value_t = 0.1)]
    shrinkage: f64,
    #[arg(long, value_parser = parse_serde::<CorrelationMode>, default_value = "pearson")]
    correlation: CorrelationMode,
    #[arg(long, value_parser = parse_serde::<Normalization>, default_value = "none")]
    normalization: Normalization,
    /// Zero partial correlations with smaller magnitude.
    #[arg(long, default_value_t = 0.0)]
    sparsity: f64,
    /// Uniformly subsample this many nodes first.
    #[arg(long)]
    subset: Option<usize>,
    #[arg(long, requires = "subset")]
    stratified: bool,
    /// Also write a problem file with the dataset labels, hiding `--mask`.
    #[arg(long)]
    problem_out: Option<PathBuf>,
    /// Labels to hide in the problem file: a count, a fraction or a percentage.
    #[arg(long, value_parser = parse_mask_size, default_value = "20%", requires = "problem_out")]
    mask: MaskSize,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Abstain unless the softmax confidence reaches this threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

impl SelectArgs {
    fn selection(&self) -> Selection {
        match self.threshold {
            Some(threshold) => Selection::ConfidenceThreshold { threshold },
            None => Selection::Argmax,
        }
    }
}

#[derive(Debug, Args)]
struct PropagateArgs {
    #[command(flatten)]
    common: Common,
    /// Partial-correlation or transition matrix file (JSON or binary).
    #[arg(long)]
    matrix: PathBuf,
    /// Problem file with the categories and known nodes.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_parser = parse_method, default_value = "analytical-exp")]
    method: Method,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, value_parser = parse_serde::<Regularizer>, default_value = "kl")]
    regularizer: Regularizer,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[command(flatten)]
    select: SelectArgs,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[command(flatten)]
    common: Common,
    /// Partial-correlation matrix file.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 64)]
    dimension: usize,
    #[arg(long, default_value_t = 20)]
    walk_length: usize,
    #[arg(long, default_value_t = 10)]
    walks_per_node: usize,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, value_parser = parse_serde::<ClassifierKind>, default_value = "logistic-regression")]
    classifier: ClassifierKind,
    #[arg(long, value_parser = parse_serde::<Loss>, default_value = "cross-entropy")]
    loss: Loss,
    /// Also write the node embeddings as a matrix file.
    #[arg(long)]
    embeddings_out: Option<PathBuf>,
    #[command(flatten)]
    select: SelectArgs,
}

/// Flags that override fields of the experiment spec.
#[derive(Debug, Args)]
struct SpecArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    validation_runs: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_parser = parse_resample)]
    resample: Option<Resample>,
    #[arg(long, value_parser = parse_serde::<SplitPolicy>)]
    split: Option<SplitPolicy>,
    #[arg(long)]
    subset_size: Option<usize>,
}

impl SpecArgs {
    fn load(&self, seed: Option<u64>) -> knowprop::Result<ExperimentSpec> {
        let text = std::fs::read_to_string(&self.spec).map_err(|e| Error::Io {
            path: self.spec.clone(),
            source: e,
        })?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text)?;
        if let Some(s) = seed {
            spec.seed = s;
        }
        if let Some(r) = self.runs {
            spec.runs = r;
        }
        if let Some(r) = self.validation_runs {
            spec.validation_runs = r;
        }
        if let Some(w) = self.workers {
            spec.workers = w;
        }
        if let Some(r) = self.resample {
            spec.resample = r;
        }
        if let Some(s) = self.split {
            spec.split = s;
        }
        if let Some(n) = self.subset_size {
            spec.subset_size = n;
        }
        resolve_paths(&mut spec.dataset, self.spec.parent());
        spec.validate()?;
        Ok(spec)
    }
}

/// Relative dataset paths in a spec file are taken relative to the file.
fn resolve_paths(dataset: &mut DatasetRef, base: Option<&Path>) {
    let Some(base) = base else { return };
    if let DatasetRef::Cora { path } | DatasetRef::Pubmed { path } | DatasetRef::Json { path } = dataset {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    spec: SpecArgs,
}

#[derive(Debug, Args)]
struct SweepMaskArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Comma-separated masked-node counts.
    #[arg(long, value_delimiter = ',', conflicts_with = "max")]
    counts: Vec<usize>,
    /// Sweep counts 1, 1 + step, ... up to this value (inclusive).
    #[arg(long)]
    max: Option<usize>,
    #[arg(long, default_value_t = 1, requires = "max")]
    step: usize,
}

#[derive(Debug, Args)]
struct SweepThresholdArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Comma-separated thresholds; defaults to eleven values from 1/C up to
    /// the largest attainable confidence.
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
}

fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_resample(s: &str) -> Result<Resample, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mask_size(s: &str) -> Result<MaskSize, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Numerical => EXIT_NUMERICAL,
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
}

fn execute(cmd: Command) -> knowprop::Result<()> {
    match cmd {
        Command::Recover(a) => recover(a),
        Command::Propagate(a) => propagate(a),
        Command::Embed(a) => embed(a),
        Command::Experiment(a) => experiment(a),
        Command::SweepMask(a) => sweep_mask(a),
        Command::SweepThreshold(a) => sweep_threshold(a),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> knowprop::Result<()> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

/// JSON or CSV text output; binary is only meaningful for matrices.
fn emit_text(common: &Common, json: impl FnOnce() -> knowprop::Result<String>, csv: impl FnOnce() -> String) -> knowprop::Result<()> {
    let mut text = match common.format {
        Format::Json => json()?,
        Format::Csv => csv(),
        Format::Binary => return Err(usage("--format binary applies to matrix outputs only")),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit(common.out.as_deref(), text.as_bytes())
}

fn load_source(source: Source, data: Option<&Path>, seed: u64) -> knowprop::Result<Dataset> {
    let path = || data.ok_or_else(|| usage("--data is required for this source"));
    match source {
        Source::Cora => dataset::load_cora(path()?),
        Source::Pubmed => dataset::load_pubmed(path()?),
        Source::Json => dataset::load_dataset_json(path()?),
        Source::Synthetic => dataset::synthetic(&SyntheticConfig {
            seed,
            ..Default::default()
        }),
    }
}

fn recover(a: RecoverArgs) -> knowprop::Result<()> {
    let seed = a.common.seed.unwrap_or(0);
    let mut ds = load_source(a.source, a.data.as_deref(), seed)?;
    if let Some(n) = a.subset {
        ds = if a.stratified {
            dataset::subsample_stratified(&ds, n, seed)?
        } else {
            dataset::subsample(&ds, n, seed)?
        };
    }
    if !(0.0..=1.0).contains(&a.shrinkage) {
        return Err(usage(format!("shrinkage {} outside [0, 1]", a.shrinkage)));
    }
    if !(0.0..1.0).contains(&a.sparsity) {
        return Err(usage(format!("sparsity {} outside [0, 1)", a.sparsity)));
    }
    let ds = dataset::normalize(&ds, a.normalization);
    let p = cigraph::recover(ds.features(), a.correlation, a.shrinkage, a.sparsity)?;
    log::info!("recovered {0}×{0} partial correlations", p.dim());
    let file = p.to_file().with_node_ids(ds.node_ids().to_vec());
    let encoding = match a.common.format {
        Format::Json => MatrixEncoding::Json,
        Format::Csv => MatrixEncoding::Csv,
        Format::Binary => MatrixEncoding::Binary,
    };
    emit(a.common.out.as_deref(), &file.encode(encoding)?)?;
    if let Some(path) = &a.problem_out {
        let problem = problem_from_dataset(&ds, a.mask, seed)?;
        emit(Some(path), problem.to_json()?.as_bytes())?;
    }
    Ok(())
}

/// Problem over every node of `ds`, with the labels of a random `mask`
/// hidden.
pub fn problem_from_dataset(ds: &Dataset, mask: MaskSize, seed: u64) -> knowprop::Result<Problem> {
    let mask = dataset::mask_labels(ds, mask, seed)?;
    let known = mask
        .known()
        .iter()
        .map(|&node| KnownNode {
            node,
            label: Some(ds.categories()[ds.labels()[node]].clone()),
            category: None,
            distribution: None,
        })
        .collect();
    let mut problem = Problem::new(ds.categories().to_vec(), ds.num_nodes(), known);
    problem.node_ids = Some(ds.node_ids().to_vec());
    Ok(problem)
}

fn read_problem(path: &Path) -> knowprop::Result<Problem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Problem::from_json(&text)
}

fn propagate(a: PropagateArgs) -> knowprop::Result<()> {
    let problem = read_problem(&a.problem)?;
    let graph = GraphInput::from_file(&MatrixFile::read(&a.matrix)?)?;
    let cfg = PropagationConfig {
        epsilon: a.epsilon,
        max_iters: a.max_iters,
        regularizer: a.regularizer,
        selection: a.select.selection(),
    };
    cfg.validate()?;
    let result = solve(&problem, &graph, a.method, TransitionConfig::new(a.alpha)?, &cfg)?;
    if result.converged == Some(false) {
        log::warn!("{} did not converge within {} iterations", a.method, a.max_iters);
    }
    emit_text(&a.common, || result.to_json(), || result.to_csv())
}

fn embed(a: EmbedArgs) -> knowprop::Result<()> {
    let problem = read_problem(&a.problem)?;
    let partial = cigraph::PartialCorrelationMatrix::from_file(&MatrixFile::read(&a.matrix)?)?;
    let seed = a.common.seed.unwrap_or(0);
    let ecfg = EmbeddingConfig {
        dimension: a.dimension,
        walk_length: a.walk_length,
        walks_per_node: a.walks_per_node,
        p: a.p,
        q: a.q,
        window: a.window,
        epochs: a.epochs,
        seed,
        ..Default::default()
    };
    ecfg.validate()?;
    let ccfg = ClassifierConfig {
        kind: a.classifier,
        loss: a.loss,
        seed: knowprop::seed::derive(seed, 1),
        ..Default::default()
    };
    ccfg.validate()?;
    let selection = a.select.selection();
    let (emb, result) = solve_embedding(&problem, &partial, TransitionConfig::new(a.alpha)?, &ecfg, &ccfg, selection)?;
    if let Some(path) = &a.embeddings_out {
        emb.to_file(problem.node_ids.clone()).write(path, MatrixEncoding::Json)?;
    }
    emit_text(&a.common, || result.to_json(), || result.to_csv())
}

fn experiment(a: ExperimentArgs) -> knowprop::Result<()> {
    let spec = a.spec.load(a.common.seed)?;
    let report = Experiment::new(spec)?.compare_methods()?;
    emit_text(&a.common, || Ok(serde_json::to_string_pretty(&report)?), || report.to_csv())
}

fn sweep_counts(a: &SweepMaskArgs) -> knowprop::Result<Vec<usize>> {
    if let Some(max) = a.max {
        if a.step == 0 {
            return Err(usage("--step must be ≥ 1"));
        }
        let mut counts: Vec<usize> = (1..=max).step_by(a.step).collect();
        if counts.last() != Some(&max) && max >= 1 {
            counts.push(max);
        }
        return Ok(counts);
    }
    Ok(a.counts.clone())
}

fn sweep_mask(a: SweepMaskArgs) -> knowprop::Result<()> {
    let counts = sweep_counts(&a)?;
    let spec = a.spec.load(a.common.seed)?;
    let report = Experiment::new(spec)?.masking_sweep(a.method, &counts)?;
    emit_text(&a.common, || Ok(serde_json::to_string_pretty(&report)?), || report.to_csv())
}

fn sweep_threshold(a: SweepThresholdArgs) -> knowprop::Result<()> {
    let spec = a.spec.load(a.common.seed)?;
    let reports = Experiment::new(spec)?.threshold_sweep(a.method, &a.thresholds)?;
    emit_text(
        &a.common,
        || Ok(serde_json::to_string_pretty(&reports)?),
        || {
            let mut out = String::from("level,threshold,coverage,accuracy,predicted,correct,unknown\n");
            for r in &reports {
                for line in r.to_csv().lines().skip(1) {
                    out.push_str(&format!("{},{line}\n", r.level));
                }
            }
            out
        },
    )
}
