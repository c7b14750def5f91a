//! Publication datasets, preprocessing and known/unknown splits.
//!
//! A [`Dataset`] stores its observations as an `M × D` matrix: one column per
//! node (publication) and one row per observation sample (dictionary word).
//! Correlations between nodes are therefore computed across words.

mod container;
mod cora;
mod pubmed;
mod synthetic;

use std::collections::{BTreeSet, HashSet};

use nalgebra::DMatrix;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use container::{load_dataset_json, parse_dataset_json, save_dataset_json, to_json_string};
pub use cora::{load_cora, parse_cora};
pub use pubmed::{load_pubmed, parse_pubmed};
pub use synthetic::{synthetic, SyntheticConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceTag {
    Cora,
    PubMedDiabetes,
    Synthetic,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    node_ids: Vec<String>,
    features: DMatrix<f64>,
    labels: Vec<usize>,
    categories: Vec<String>,
    source: SourceTag,
}

impl Dataset {
    /// Builds a dataset; `labels[i]` indexes into `categories`.
    pub fn new(
        node_ids: Vec<String>,
        features: DMatrix<f64>,
        labels: Vec<usize>,
        categories: Vec<String>,
        source: SourceTag,
    ) -> Result<Self> {
        let d = node_ids.len();
        if d == 0 {
            return Err(Error::Dataset("dataset has no nodes".into()));
        }
        if features.ncols() != d || labels.len() != d {
            return Err(Error::Dataset(format!(
                "{} node ids, {} labels, {} feature columns",
                d,
                labels.len(),
                features.ncols()
            )));
        }
        if categories.len() < 2 {
            return Err(Error::Dataset(format!(
                "need at least 2 categories, found {}",
                categories.len()
            )));
        }
        let distinct: HashSet<&str> = categories.iter().map(String::as_str).collect();
        if distinct.len() != categories.len() {
            return Err(Error::Dataset("duplicate category name".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= categories.len()) {
            return Err(Error::Dataset(format!("label index {bad} out of range")));
        }
        let mut seen = HashSet::with_capacity(d);
        for id in &node_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Dataset(format!("duplicate node id {id:?}")));
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dataset("non-finite feature value".into()));
        }
        Ok(Self {
            node_ids,
            features,
            labels,
            categories,
            source,
        })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    /// `M × D` observation matrix.
    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn source(&self) -> SourceTag {
        self.source
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn num_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    /// Restricts the dataset to the given node indices, in the given order.
    pub fn select_nodes(&self, nodes: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = nodes.iter().find(|&&i| i >= self.num_nodes()) {
            return Err(Error::InvalidArgument(format!("node index {bad} out of range")));
        }
        let features = self.features.select_columns(nodes);
        Dataset::new(
            nodes.iter().map(|&i| self.node_ids[i].clone()).collect(),
            features,
            nodes.iter().map(|&i| self.labels[i]).collect(),
            self.categories.clone(),
            self.source,
        )
    }
}

/// Uniformly samples `size` nodes without replacement. Sampled nodes keep
/// their original relative order.
pub fn subsample(ds: &Dataset, size: usize, seed: u64) -> Result<Dataset> {
    check_subsample_size(ds, size)?;
    let mut rng = seed::rng(seed);
    let mut picked = index::sample(&mut rng, ds.num_nodes(), size).into_vec();
    picked.sort_unstable();
    ds.select_nodes(&picked)
}

/// Class-stratified variant of [`subsample`]: each category contributes in
/// proportion to its frequency (largest-remainder rounding).
pub fn subsample_stratified(ds: &Dataset, size: usize, seed: u64) -> Result<Dataset> {
    check_subsample_size(ds, size)?;
    let c = ds.num_categories();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (node, &label) in ds.labels().iter().enumerate() {
        members[label].push(node);
    }
    let d = ds.num_nodes() as f64;
    let exact: Vec<f64> = members
        .iter()
        .map(|m| m.len() as f64 * size as f64 / d)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut short = size - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &cat in order.iter().cycle() {
        if short == 0 {
            break;
        }
        if quota[cat] < members[cat].len() {
            quota[cat] += 1;
            short -= 1;
        }
    }

    let mut rng = seed::rng(seed);
    let mut picked = Vec::with_capacity(size);
    for (cat, nodes) in members.iter().enumerate() {
        for i in index::sample(&mut rng, nodes.len(), quota[cat]) {
            picked.push(nodes[i]);
        }
    }
    picked.sort_unstable();
    ds.select_nodes(&picked)
}

fn check_subsample_size(ds: &Dataset, size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::InvalidArgument("subsample size must be positive".into()));
    }
    if size > ds.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "subsample size {size} exceeds node count {}",
            ds.num_nodes()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    None,
    MinMax,
    MeanCenter,
}

/// Normalizes every node column of `X` across its observation samples.
pub fn normalize(ds: &Dataset, method: Normalization) -> Dataset {
    let mut out = ds.clone();
    match method {
        Normalization::None => {}
        Normalization::MinMax => {
            for mut col in out.features.column_iter_mut() {
                let lo = col.min();
                let hi = col.max();
                let range = hi - lo;
                if range > 0.0 {
                    col.apply(|v| *v = (*v - lo) / range);
                } else {
                    col.fill(0.0);
                }
            }
        }
        Normalization::MeanCenter => {
            for mut col in out.features.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
            }
        }
    }
    out
}

/// Known/unknown split of the node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownMask {
    known: Vec<usize>,
    unknown: Vec<usize>,
    is_known: Vec<bool>,
}

impl KnownMask {
    /// Mask over `num_nodes` nodes where exactly `unknown` are unknown.
    pub fn from_unknown(num_nodes: usize, unknown: &[usize]) -> Result<Self> {
        let mut is_known = vec![true; num_nodes];
        for &u in unknown {
            if u >= num_nodes {
                return Err(Error::InvalidArgument(format!(
                    "node {u} out of range for {num_nodes} nodes"
                )));
            }
            if !is_known[u] {
                return Err(Error::InvalidArgument(format!("node {u} listed twice")));
            }
            is_known[u] = false;
        }
        Ok(Self::from_flags(is_known))
    }

    pub fn from_known(num_nodes: usize, known: &[usize]) -> Result<Self> {
        let mut is_known = vec![false; num_nodes];
        for &k in known {
            if k >= num_nodes {
                return Err(Error::InvalidArgument(format!(
                    "node {k} out of range for {num_nodes} nodes"
                )));
            }
            if is_known[k] {
                return Err(Error::InvalidArgument(format!("node {k} listed twice")));
            }
            is_known[k] = true;
        }
        Ok(Self::from_flags(is_known))
    }

    fn from_flags(is_known: Vec<bool>) -> Self {
        let (known, unknown): (Vec<usize>, Vec<usize>) =
            (0..is_known.len()).partition(|&i| is_known[i]);
        Self {
            known,
            unknown,
            is_known,
        }
    }

    /// Known node indices, ascending.
    pub fn known(&self) -> &[usize] {
        &self.known
    }

    /// Unknown node indices, ascending.
    pub fn unknown(&self) -> &[usize] {
        &self.unknown
    }

    pub fn is_known(&self, node: usize) -> bool {
        self.is_known[node]
    }

    pub fn num_nodes(&self) -> usize {
        self.is_known.len()
    }
}

/// How many labels to hide. In JSON a float is a fraction, an integer is a
/// count, and a string such as `"20%"` is a percentage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskSize {
    /// Fraction of nodes in (0, 1), rounded to the nearest count.
    Fraction(f64),
    Count(usize),
}

impl MaskSize {
    pub fn unknown_count(&self, num_nodes: usize) -> Result<usize> {
        let count = match *self {
            MaskSize::Fraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "mask fraction {f} outside (0, 1)"
                    )));
                }
                (f * num_nodes as f64).round() as usize
            }
            MaskSize::Count(c) => c,
        };
        if count == 0 {
            return Err(Error::InvalidArgument("mask hides no nodes".into()));
        }
        if count >= num_nodes {
            return Err(Error::InvalidArgument(format!(
                "masking {count} of {num_nodes} nodes leaves no known node"
            )));
        }
        Ok(count)
    }
}

impl std::str::FromStr for MaskSize {
    type Err = Error;

    /// `"20%"` and `"0.2"` are fractions, `"15"` is a count.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("bad mask size {s:?}"));
        if let Some(pct) = s.strip_suffix('%') {
            let v: f64 = pct.trim().parse().map_err(|_| bad())?;
            return Ok(MaskSize::Fraction(v / 100.0));
        }
        if s.contains(['.', 'e', 'E']) {
            return s.parse().map(MaskSize::Fraction).map_err(|_| bad());
        }
        s.parse().map(MaskSize::Count).map_err(|_| bad())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaskSizeRepr {
    Count(usize),
    Fraction(f64),
    Text(String),
}

impl Serialize for MaskSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            MaskSize::Fraction(f) => MaskSizeRepr::Fraction(f),
            MaskSize::Count(c) => MaskSizeRepr::Count(c),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MaskSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match MaskSizeRepr::deserialize(d)? {
            MaskSizeRepr::Count(c) => Ok(MaskSize::Count(c)),
            MaskSizeRepr::Fraction(f) => Ok(MaskSize::Fraction(f)),
            MaskSizeRepr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::fmt::Display for MaskSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaskSize::Fraction(x) => write!(f, "{}%", (x * 1e8).round() / 1e6),
            MaskSize::Count(c) => write!(f, "{c}"),
        }
    }
}

/// Hides a uniformly sampled set of node labels.
pub fn mask_labels(ds: &Dataset, size: MaskSize, seed: u64) -> Result<KnownMask> {
    random_mask(ds.num_nodes(), size, seed)
}

pub fn random_mask(num_nodes: usize, size: MaskSize, seed: u64) -> Result<KnownMask> {
    let count = size.unknown_count(num_nodes)?;
    let mut rng = seed::rng(seed);
    let unknown = index::sample(&mut rng, num_nodes, count).into_vec();
    KnownMask::from_unknown(num_nodes, &unknown)
}

/// `path` itself unless it is a directory, in which case the first existing
/// candidate below it (or the first candidate, for the error message).
fn resolve_file(path: &std::path::Path, candidates: &[&str]) -> std::path::PathBuf {
    if !path.is_dir() {
        return path.to_path_buf();
    }
    candidates
        .iter()
        .map(|c| path.join(c))
        .find(|p| p.is_file())
        .unwrap_or_else(|| path.join(candidates[0]))
}

/// Distinct values in first-seen order are not stable across files, so
/// category names are always sorted.
pub(crate) fn sorted_categories<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    names
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(d: usize) -> Dataset {
        let features = DMatrix::from_fn(4, d, |r, c| (r * d + c) as f64);
        Dataset::new(
            (0..d).map(|i| format!("n{i}")).collect(),
            features,
            (0..d).map(|i| i % 3).collect(),
            vec!["a".into(), "b".into(), "c".into()],
            SourceTag::Custom,
        )
        .unwrap()
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let err = Dataset::new(
            vec!["x".into()],
            DMatrix::zeros(2, 2),
            vec![0],
            vec!["a".into(), "b".into()],
            SourceTag::Custom,
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_single_category() {
        let err = Dataset::new(
            vec!["x".into()],
            DMatrix::zeros(2, 1),
            vec![0],
            vec!["a".into()],
            SourceTag::Custom,
        );
        assert!(err.is_err());
    }

    #[test]
    fn subsample_is_deterministic() {
        let ds = toy(50);
        let a = subsample(&ds, 20, 7).unwrap();
        let b = subsample(&ds, 20, 7).unwrap();
        assert_eq!(a.node_ids(), b.node_ids());
        assert_eq!(a.num_nodes(), 20);
        let c = subsample(&ds, 20, 8).unwrap();
        assert_ne!(a.node_ids(), c.node_ids());
    }

    #[test]
    fn subsample_everything_keeps_node_set() {
        let ds = toy(12);
        let all = subsample(&ds, 12, 99).unwrap();
        let mut ids = all.node_ids().to_vec();
        ids.sort();
        let mut orig = ds.node_ids().to_vec();
        orig.sort();
        assert_eq!(ids, orig);
        assert_eq!(all, ds);
    }

    #[test]
    fn subsample_bounds() {
        let ds = toy(5);
        assert!(subsample(&ds, 0, 1).is_err());
        assert!(subsample(&ds, 6, 1).is_err());
    }

    #[test]
    fn subsample_restricts_feature_columns() {
        let ds = toy(10);
        let sub = subsample(&ds, 4, 3).unwrap();
        for (j, id) in sub.node_ids().iter().enumerate() {
            let orig = ds.node_ids().iter().position(|x| x == id).unwrap();
            assert_eq!(sub.features().column(j), ds.features().column(orig));
            assert_eq!(sub.labels()[j], ds.labels()[orig]);
        }
    }

    #[test]
    fn stratified_subsample_keeps_proportions() {
        let ds = toy(30);
        let sub = subsample_stratified(&ds, 12, 5).unwrap();
        assert_eq!(sub.num_nodes(), 12);
        for cat in 0..3 {
            assert_eq!(sub.labels().iter().filter(|&&l| l == cat).count(), 4);
        }
    }

    #[test]
    fn min_max_example() {
        let features = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 1.0, 4.0]);
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            features,
            vec![0, 1],
            vec!["x".into(), "y".into()],
            SourceTag::Custom,
        )
        .unwrap();
        let out = normalize(&ds, Normalization::MinMax);
        assert_eq!(
            out.features(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0])
        );
    }

    #[test]
    fn min_max_constant_column_is_zero() {
        let features = DMatrix::from_row_slice(3, 2, &[5.0, 1.0, 5.0, 2.0, 5.0, 3.0]);
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            features,
            vec![0, 1],
            vec!["x".into(), "y".into()],
            SourceTag::Custom,
        )
        .unwrap();
        let out = normalize(&ds, Normalization::MinMax);
        assert!(out.features().column(0).iter().all(|&v| v == 0.0));
        assert!(out.features().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn mean_center_zeroes_column_means() {
        let ds = toy(6);
        let out = normalize(&ds, Normalization::MeanCenter);
        for col in out.features().column_iter() {
            assert!(col.mean().abs() < 1e-12);
        }
    }

    #[test]
    fn none_is_identity() {
        let ds = toy(6);
        assert_eq!(normalize(&ds, Normalization::None), ds);
    }

    #[test]
    fn mask_sizes() {
        let ds = toy(300);
        let m = mask_labels(&ds, MaskSize::Fraction(0.2), 1).unwrap();
        assert_eq!(m.unknown().len(), 60);
        assert_eq!(m.known().len(), 240);
        let m = mask_labels(&ds, MaskSize::Count(1), 1).unwrap();
        assert_eq!(m.unknown().len(), 1);
        let m = mask_labels(&ds, MaskSize::Count(225), 1).unwrap();
        assert_eq!(m.unknown().len(), 225);
    }

    #[test]
    fn mask_errors() {
        let ds = toy(10);
        assert!(mask_labels(&ds, MaskSize::Fraction(0.0), 1).is_err());
        assert!(mask_labels(&ds, MaskSize::Fraction(1.0), 1).is_err());
        assert!(mask_labels(&ds, MaskSize::Fraction(-0.5), 1).is_err());
        assert!(mask_labels(&ds, MaskSize::Count(10), 1).is_err());
        assert!(mask_labels(&ds, MaskSize::Count(0), 1).is_err());
    }

    #[test]
    fn mask_partitions_nodes() {
        let m = random_mask(40, MaskSize::Count(13), 4).unwrap();
        let mut all: Vec<usize> = m.known().iter().chain(m.unknown()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        assert_eq!(m, random_mask(40, MaskSize::Count(13), 4).unwrap());
        for &u in m.unknown() {
            assert!(!m.is_known(u));
        }
    }

    #[test]
    fn mask_rejects_duplicates() {
        assert!(KnownMask::from_unknown(3, &[1, 1]).is_err());
        assert!(KnownMask::from_known(3, &[5]).is_err());
    }

    #[test]
    fn mask_size_json_forms() {
        let parse = |t: &str| serde_json::from_str::<MaskSize>(t).unwrap();
        assert_eq!(parse("0.2"), MaskSize::Fraction(0.2));
        assert_eq!(parse("15"), MaskSize::Count(15));
        assert_eq!(parse("\"40%\""), MaskSize::Fraction(0.4));
        assert!(serde_json::from_str::<MaskSize>("\"x\"").is_err());
        for m in [MaskSize::Fraction(0.6), MaskSize::Count(225)] {
            assert_eq!(parse(&serde_json::to_string(&m).unwrap()), m);
        }
        assert_eq!(MaskSize::Fraction(0.2).to_string(), "20%");
        assert_eq!("7".parse::<MaskSize>().unwrap(), MaskSize::Count(7));
        assert!("-3".parse::<MaskSize>().is_err());
    }
}
