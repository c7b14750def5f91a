//! Reader for the Linqs `Pubmed-Diabetes.NODE.paper.tab` file.
//!
//! Layout (fields separated by tabs):
//!
//! ```text
//! NODE    paper
//! cat=1,2,3:label numeric:<word_1>:0.0 ... numeric:<word_W>:0.0 string:summary
//! <id>    label=<k>  <word>=<weight> ... summary=<word>,<word>,...
//! ```
//!
//! The second line fixes the vocabulary and its order. Records list only the
//! words with nonzero weight; absent words are 0.0. `k` is 1, 2 or 3.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;

use super::{Dataset, SourceTag};
use crate::error::{read_to_string, Error, Result};

const CATEGORIES: [&str; 3] = ["1", "2", "3"];

/// Reads `path`; a directory is searched for the node table, directly or
/// under `data/`.
pub fn load_pubmed(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = super::resolve_file(
        path.as_ref(),
        &["Pubmed-Diabetes.NODE.paper.tab", "data/Pubmed-Diabetes.NODE.paper.tab"],
    );
    parse_pubmed(&read_to_string(&path)?)
}

pub fn parse_pubmed(text: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    match lines.next() {
        Some((_, l)) if l.split_whitespace().next() == Some("NODE") => {}
        Some((n, _)) => return Err(Error::parse(n, "expected `NODE paper` header")),
        None => return Err(Error::Dataset("PubMed file is empty".into())),
    }
    let (vocab_line, header) = lines
        .next()
        .ok_or_else(|| Error::Dataset("PubMed file has no vocabulary header".into()))?;
    let vocabulary = parse_vocabulary(vocab_line, header)?;
    let word_index: HashMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let width = vocabulary.len();

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut seen = HashSet::new();

    for (line_no, line) in lines {
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("non-blank line has a field");
        if !seen.insert(id) {
            return Err(Error::parse(line_no, format!("duplicate paper id {id:?}")));
        }
        let base = values.len();
        values.resize(base + width, 0.0);
        let mut label = None;
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("malformed field {field:?}")))?;
            match key {
                "label" => {
                    let k = match value {
                        "1" => 0,
                        "2" => 1,
                        "3" => 2,
                        other => {
                            return Err(Error::parse(
                                line_no,
                                format!("label {other:?} outside {{1, 2, 3}}"),
                            ))
                        }
                    };
                    label = Some(k);
                }
                "summary" => {}
                word => {
                    let &w = word_index.get(word).ok_or_else(|| {
                        Error::parse(line_no, format!("unknown word token {word:?}"))
                    })?;
                    let weight: f64 = value.parse().map_err(|_| {
                        Error::parse(line_no, format!("weight {value:?} for {word:?} is not a number"))
                    })?;
                    if !weight.is_finite() {
                        return Err(Error::parse(line_no, format!("non-finite weight for {word:?}")));
                    }
                    values[base + w] = weight;
                }
            }
        }
        let label = label.ok_or_else(|| Error::parse(line_no, "missing label field"))?;
        ids.push(id.to_owned());
        labels.push(label);
    }

    if ids.is_empty() {
        return Err(Error::Dataset("PubMed file contains no nodes".into()));
    }
    let features = DMatrix::from_vec(width, ids.len(), values);
    Dataset::new(
        ids,
        features,
        labels,
        CATEGORIES.iter().map(|s| s.to_string()).collect(),
        SourceTag::PubMedDiabetes,
    )
}

fn parse_vocabulary(line_no: usize, line: &str) -> Result<Vec<String>> {
    let mut vocabulary = Vec::new();
    let mut seen = HashSet::new();
    for field in line.split_whitespace() {
        if field.starts_with("cat=") || field.starts_with("string:") {
            continue;
        }
        let word = field
            .strip_prefix("numeric:")
            .and_then(|rest| rest.rsplit_once(':'))
            .map(|(word, _default)| word)
            .ok_or_else(|| Error::parse(line_no, format!("malformed vocabulary field {field:?}")))?;
        if word.is_empty() || !seen.insert(word) {
            return Err(Error::parse(line_no, format!("bad or repeated word {word:?}")));
        }
        vocabulary.push(word.to_owned());
    }
    if vocabulary.is_empty() {
        return Err(Error::parse(line_no, "vocabulary header lists no words"));
    }
    Ok(vocabulary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "NODE\tpaper\n\
        cat=1,2,3:label\tnumeric:w-rat:0.0\tnumeric:w-insulin:0.0\tnumeric:w-mice:0.0\tstring:summary\n";

    #[test]
    fn parses_records_and_fills_absent_words() {
        let text = format!(
            "{HEADER}\
             100\tlabel=1\tw-rat=0.5\tsummary=w-rat\n\
             200\tlabel=3\tw-insulin=0.25\tw-mice=0.125\tsummary=w-insulin,w-mice\n\
             300\tlabel=2\tsummary=\n"
        );
        let ds = parse_pubmed(&text).unwrap();
        assert_eq!(ds.num_nodes(), 3);
        assert_eq!(ds.num_samples(), 3);
        assert_eq!(ds.categories(), ["1", "2", "3"]);
        assert_eq!(ds.labels(), [0, 2, 1]);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.5, 0.0, 0.0, //
                0.0, 0.25, 0.0, //
                0.0, 0.125, 0.0,
            ],
        );
        assert_eq!(ds.features(), &expected);
        assert!(ds.features().column(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unknown_word_is_reported() {
        let text = format!("{HEADER}100\tlabel=1\tw-dog=0.5\n");
        let err = parse_pubmed(&text).unwrap_err().to_string();
        assert!(err.contains("w-dog"), "{err}");
    }

    #[test]
    fn label_out_of_range() {
        let text = format!("{HEADER}100\tlabel=4\tw-rat=0.5\n");
        assert!(matches!(parse_pubmed(&text), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_header_is_rejected() {
        assert!(parse_pubmed("").is_err());
        assert!(parse_pubmed("100\tlabel=1\n").is_err());
        assert!(parse_pubmed("NODE\tpaper\n").is_err());
    }

    #[test]
    fn missing_label_is_rejected() {
        let text = format!("{HEADER}100\tw-rat=0.5\n");
        assert!(parse_pubmed(&text).is_err());
    }
}
