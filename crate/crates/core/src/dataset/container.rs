//! Self-describing JSON container for datasets.
//!
//! ```json
//! {
//!   "format": "knowprop-dataset",
//!   "version": 1,
//!   "source": "cora",
//!   "node_ids": ["31336", ...],
//!   "categories": ["Neural_Networks", ...],
//!   "labels": ["Neural_Networks", ...],
//!   "features": { "encoding": "sparse", "rows": 1433, "cols": 2708,
//!                 "entries": [[row, col, value], ...] }
//! }
//! ```
//!
//! `features` may instead be `{"encoding": "dense", "rows", "cols", "data"}`
//! with `data` in row-major order. Writers pick sparse when fewer than a third
//! of the entries are nonzero.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Dataset, SourceTag};
use crate::error::{read_to_string, Error, Result};

const FORMAT: &str = "knowprop-dataset";
const VERSION: u32 = 1;
/// Upper bound on the densified size of a sparse payload (512 MiB of f64).
const MAX_SPARSE_CELLS: usize = 1 << 26;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    format: String,
    version: u32,
    source: SourceTag,
    node_ids: Vec<String>,
    categories: Vec<String>,
    labels: Vec<String>,
    features: FeaturePayload,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "lowercase", deny_unknown_fields)]
enum FeaturePayload {
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Sparse {
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, f64)>,
    },
}

pub fn to_json_string(ds: &Dataset) -> Result<String> {
    let x = ds.features();
    let (rows, cols) = x.shape();
    let nnz = x.iter().filter(|&&v| v != 0.0).count();
    let features = if nnz * 3 < rows * cols {
        let mut entries = Vec::with_capacity(nnz);
        for r in 0..rows {
            for c in 0..cols {
                let v = x[(r, c)];
                if v != 0.0 {
                    entries.push((r, c, v));
                }
            }
        }
        FeaturePayload::Sparse { rows, cols, entries }
    } else {
        let data = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| x[(r, c)])
            .collect();
        FeaturePayload::Dense { rows, cols, data }
    };
    let file = DatasetFile {
        format: FORMAT.into(),
        version: VERSION,
        source: ds.source(),
        node_ids: ds.node_ids().to_vec(),
        categories: ds.categories().to_vec(),
        labels: ds
            .labels()
            .iter()
            .map(|&l| ds.categories()[l].clone())
            .collect(),
        features,
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn save_dataset_json(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_string(ds)?).map_err(|e| Error::io(path, e))
}

pub fn load_dataset_json(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_dataset_json(&read_to_string(path.as_ref())?)
}

pub fn parse_dataset_json(text: &str) -> Result<Dataset> {
    let file: DatasetFile = serde_json::from_str(text)?;
    if file.format != FORMAT {
        return Err(Error::Dataset(format!("unexpected format tag {:?}", file.format)));
    }
    if file.version != VERSION {
        return Err(Error::Dataset(format!("unsupported version {}", file.version)));
    }
    let index: HashMap<&str, usize> = file
        .categories
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels = file
        .labels
        .iter()
        .map(|l| {
            index
                .get(l.as_str())
                .copied()
                .ok_or_else(|| Error::Dataset(format!("label {l:?} is not a listed category")))
        })
        .collect::<Result<Vec<_>>>()?;

    let features = match file.features {
        FeaturePayload::Dense { rows, cols, data } => {
            if rows.checked_mul(cols) != Some(data.len()) {
                return Err(Error::Dataset(format!(
                    "dense payload has {} values for a {rows}×{cols} matrix",
                    data.len()
                )));
            }
            DMatrix::from_row_slice(rows, cols, &data)
        }
        FeaturePayload::Sparse { rows, cols, entries } => {
            if rows.checked_mul(cols).is_none_or(|n| n > MAX_SPARSE_CELLS) {
                return Err(Error::Dataset(format!("feature shape {rows}×{cols} too large")));
            }
            if cols != file.node_ids.len() {
                return Err(Error::Dataset(format!(
                    "{cols} feature columns for {} nodes",
                    file.node_ids.len()
                )));
            }
            let mut m = DMatrix::zeros(rows, cols);
            let mut seen = HashSet::with_capacity(entries.len());
            for (r, c, v) in entries {
                if r >= rows || c >= cols {
                    return Err(Error::Dataset(format!("entry ({r}, {c}) out of range")));
                }
                if !seen.insert((r, c)) {
                    return Err(Error::Dataset(format!("entry ({r}, {c}) repeated")));
                }
                m[(r, c)] = v;
            }
            m
        }
    };
    Dataset::new(file.node_ids, features, labels, file.categories, file.source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(rows: usize, values: Vec<f64>, labels: Vec<usize>) -> Dataset {
        let d = labels.len();
        Dataset::new(
            (0..d).map(|i| format!("id-{i}")).collect(),
            DMatrix::from_vec(rows, d, values),
            labels,
            vec!["alpha".into(), "beta".into(), "gamma".into()],
            SourceTag::Synthetic,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn round_trips(
            rows in 1usize..6,
            d in 1usize..6,
            seed in any::<u64>(),
            sparse in any::<bool>(),
        ) {
            let mut state = seed;
            let values: Vec<f64> = (0..rows * d)
                .map(|_| {
                    state = crate::seed::mix(state);
                    if sparse && state % 4 != 0 {
                        0.0
                    } else {
                        (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
                    }
                })
                .collect();
            let labels = (0..d).map(|i| (i + seed as usize) % 3).collect();
            let ds = dataset(rows, values, labels);
            let back = parse_dataset_json(&to_json_string(&ds).unwrap()).unwrap();
            prop_assert_eq!(back, ds);
        }
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let ds = dataset(1, vec![1.0, 2.0], vec![0, 1]);
        let text = to_json_string(&ds).unwrap().replace(FORMAT, "other");
        assert!(parse_dataset_json(&text).is_err());
    }

    #[test]
    fn rejects_bad_dense_length() {
        let text = r#"{"format":"knowprop-dataset","version":1,"source":"custom",
            "node_ids":["a","b"],"categories":["x","y"],"labels":["x","y"],
            "features":{"encoding":"dense","rows":2,"cols":2,"data":[1,2,3]}}"#;
        assert!(parse_dataset_json(text).is_err());
    }

    #[test]
    fn rejects_unknown_label() {
        let text = r#"{"format":"knowprop-dataset","version":1,"source":"custom",
            "node_ids":["a","b"],"categories":["x","y"],"labels":["x","z"],
            "features":{"encoding":"sparse","rows":1,"cols":2,"entries":[]}}"#;
        assert!(parse_dataset_json(text).is_err());
    }

    #[test]
    fn rejects_out_of_range_sparse_entry() {
        let text = r#"{"format":"knowprop-dataset","version":1,"source":"custom",
            "node_ids":["a","b"],"categories":["x","y"],"labels":["x","y"],
            "features":{"encoding":"sparse","rows":1,"cols":2,"entries":[[1,0,3.0]]}}"#;
        assert!(parse_dataset_json(text).is_err());
    }
}
