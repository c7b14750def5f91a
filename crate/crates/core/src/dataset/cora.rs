//! Reader for the Linqs Cora `.content` file.
//!
//! One publication per line: `<paper_id> <w_1> ... <w_W> <class_label>`,
//! fields separated by tabs (any ASCII whitespace is accepted). Every `w_k`
//! is `0` or `1`; all lines must agree on `W`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;

use super::{sorted_categories, Dataset, SourceTag};
use crate::error::{read_to_string, Error, Result};

/// Reads `path`, or `path/cora.content` when `path` is a directory.
pub fn load_cora(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = super::resolve_file(path.as_ref(), &["cora.content"]);
    parse_cora(&read_to_string(&path)?)
}

pub fn parse_cora(text: &str) -> Result<Dataset> {
    let mut width: Option<usize> = None;
    let mut ids = Vec::new();
    let mut class_names = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(Error::parse(
                line_no,
                format!("expected id, features and label, found {} fields", fields.len()),
            ));
        }
        let w = fields.len() - 2;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(Error::parse(
                    line_no,
                    format!("expected {expected} features, found {w}"),
                ));
            }
            Some(_) => {}
        }
        let id = fields[0];
        if !seen.insert(id) {
            return Err(Error::parse(line_no, format!("duplicate paper id {id:?}")));
        }
        for (k, tok) in fields[1..=w].iter().enumerate() {
            let v = match *tok {
                "0" => 0.0,
                "1" => 1.0,
                other => {
                    return Err(Error::parse(
                        line_no,
                        format!("feature {} is {other:?}, expected 0 or 1", k + 1),
                    ))
                }
            };
            values.push(v);
        }
        ids.push(id.to_owned());
        class_names.push(fields[w + 1]);
    }

    let width = width.ok_or_else(|| Error::Dataset("Cora file contains no nodes".into()))?;
    let categories = sorted_categories(class_names.iter().copied());
    let index: HashMap<&str, usize> = categories
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels = class_names.iter().map(|c| index[c]).collect();
    // `values` is node-major, which is column-major for an M × D matrix.
    let features = DMatrix::from_vec(width, ids.len(), values);
    Dataset::new(ids, features, labels, categories, SourceTag::Cora)
}
