//! Matrix container shared by partial-correlation, transition and embedding
//! matrices.
//!
//! Two encodings carry the same content:
//!
//! * JSON: `{"format": "knowprop-matrix", "version": 1, "kind": "...",
//!   "rows": R, "cols": C, "data": [row-major values], "node_ids": [...]}`
//!   (`node_ids` optional, one per row).
//! * Binary, little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "KPMX"
//! 4       1     version (1)
//! 5       1     kind code (see MatrixKind::code)
//! 6       1     flags (bit 0: node ids follow the data)
//! 7       1     reserved, 0
//! 8       8     rows (u64)
//! 16      8     cols (u64)
//! 24      8·R·C values (f64, row-major)
//! ...           if flag bit 0: R × (u32 byte length + UTF-8 id)
//! ```
//!
//! Readers detect the encoding from the magic bytes.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"KPMX";
const VERSION: u8 = 1;
const FORMAT: &str = "knowprop-matrix";
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    PartialCorrelation,
    Exp,
    Pos,
    Neg,
    MaxNorm,
    Embeddings,
}

impl MatrixKind {
    pub fn code(self) -> u8 {
        match self {
            MatrixKind::PartialCorrelation => 0,
            MatrixKind::Exp => 1,
            MatrixKind::Pos => 2,
            MatrixKind::Neg => 3,
            MatrixKind::MaxNorm => 4,
            MatrixKind::Embeddings => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => MatrixKind::PartialCorrelation,
            1 => MatrixKind::Exp,
            2 => MatrixKind::Pos,
            3 => MatrixKind::Neg,
            4 => MatrixKind::MaxNorm,
            5 => MatrixKind::Embeddings,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixEncoding {
    Json,
    Binary,
    /// Plain comma-separated rows; write-only.
    Csv,
}

/// A matrix plus its kind tag and optional per-row node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub kind: MatrixKind,
    pub matrix: DMatrix<f64>,
    pub node_ids: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonMatrix {
    format: String,
    version: u8,
    kind: MatrixKind,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_ids: Option<Vec<String>>,
}

impl MatrixFile {
    pub fn new(kind: MatrixKind, matrix: DMatrix<f64>) -> Self {
        Self {
            kind,
            matrix,
            node_ids: None,
        }
    }

    pub fn with_node_ids(mut self, ids: Vec<String>) -> Self {
        self.node_ids = Some(ids);
        self
    }

    fn check(&self) -> Result<()> {
        if let Some(ids) = &self.node_ids {
            if ids.len() != self.matrix.nrows() {
                return Err(Error::Matrix(format!(
                    "{} node ids for {} rows",
                    ids.len(),
                    self.matrix.nrows()
                )));
            }
        }
        if self.matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Matrix("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.check()?;
        let (rows, cols) = self.matrix.shape();
        let file = JsonMatrix {
            format: FORMAT.into(),
            version: VERSION,
            kind: self.kind,
            rows,
            cols,
            data: row_major(&self.matrix),
            node_ids: self.node_ids.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: JsonMatrix = serde_json::from_str(text)?;
        if file.format != FORMAT {
            return Err(Error::Matrix(format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != VERSION {
            return Err(Error::Matrix(format!("unsupported version {}", file.version)));
        }
        if file.rows.checked_mul(file.cols) != Some(file.data.len()) {
            return Err(Error::Matrix(format!(
                "{} values for a {}×{} matrix",
                file.data.len(),
                file.rows,
                file.cols
            )));
        }
        let out = Self {
            kind: file.kind,
            matrix: DMatrix::from_row_slice(file.rows, file.cols, &file.data),
            node_ids: file.node_ids,
        };
        out.check()?;
        Ok(out)
    }

    pub fn to_binary(&self) -> Result<Vec<u8>> {
        self.check()?;
        let (rows, cols) = self.matrix.shape();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * rows * cols);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.kind.code());
        out.push(u8::from(self.node_ids.is_some()));
        out.push(0);
        out.extend_from_slice(&(rows as u64).to_le_bytes());
        out.extend_from_slice(&(cols as u64).to_le_bytes());
        for v in row_major(&self.matrix) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(ids) = &self.node_ids {
            for id in ids {
                let len = u32::try_from(id.len())
                    .map_err(|_| Error::Matrix("node id longer than 4 GiB".into()))?;
                out.extend_from_slice(&len.to_le_bytes());
                out.extend_from_slice(id.as_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Matrix("missing KPMX header".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Matrix(format!("unsupported version {}", bytes[4])));
        }
        let kind = MatrixKind::from_code(bytes[5])
            .ok_or_else(|| Error::Matrix(format!("unknown kind code {}", bytes[5])))?;
        let flags = bytes[6];
        if flags & !1 != 0 || bytes[7] != 0 {
            return Err(Error::Matrix("reserved header bits set".into()));
        }
        let rows = read_u64(&bytes[8..16]);
        let cols = read_u64(&bytes[16..24]);
        let body = &bytes[HEADER_LEN..];
        let cells = rows
            .checked_mul(cols)
            .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= body.len() as u64))
            .ok_or_else(|| Error::Matrix(format!("{rows}×{cols} matrix does not fit the file")))?
            as usize;
        let (rows, cols) = (rows as usize, cols as usize);
        let data: Vec<f64> = body[..cells * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut rest = &body[cells * 8..];

        let node_ids = if flags & 1 == 1 {
            let mut ids = Vec::with_capacity(rows.min(rest.len() / 4));
            for _ in 0..rows {
                if rest.len() < 4 {
                    return Err(Error::Matrix("truncated node id table".into()));
                }
                let len = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes")) as usize;
                rest = &rest[4..];
                if rest.len() < len {
                    return Err(Error::Matrix("truncated node id".into()));
                }
                let id = std::str::from_utf8(&rest[..len])
                    .map_err(|_| Error::Matrix("node id is not UTF-8".into()))?;
                ids.push(id.to_owned());
                rest = &rest[len..];
            }
            Some(ids)
        } else {
            None
        };
        if !rest.is_empty() {
            return Err(Error::Matrix(format!("{} trailing bytes", rest.len())));
        }
        let out = Self {
            kind,
            matrix: DMatrix::from_row_slice(rows, cols, &data),
            node_ids,
        };
        out.check()?;
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.matrix.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Decodes either encoding, chosen by the leading magic bytes.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(MAGIC) {
            Self::from_binary(bytes)
        } else {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| Error::Matrix("neither KPMX binary nor UTF-8 JSON".into()))?;
            Self::from_json(text)
        }
    }

    pub fn encode(&self, encoding: MatrixEncoding) -> Result<Vec<u8>> {
        match encoding {
            MatrixEncoding::Json => self.to_json().map(String::into_bytes),
            MatrixEncoding::Binary => self.to_binary(),
            MatrixEncoding::Csv => {
                self.check()?;
                Ok(self.to_csv().into_bytes())
            }
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>, encoding: MatrixEncoding) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode(encoding)?).map_err(|e| Error::io(path, e))
    }
}

fn read_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b.try_into().expect("8 bytes"))
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kind_strategy() -> impl Strategy<Value = MatrixKind> {
        (0u8..6).prop_map(|c| MatrixKind::from_code(c).unwrap())
    }

    proptest! {
        #[test]
        fn both_encodings_round_trip(
            kind in kind_strategy(),
            rows in 0usize..5,
            cols in 0usize..5,
            with_ids in any::<bool>(),
            values in proptest::collection::vec(-1e6f64..1e6, 25),
        ) {
            let m = DMatrix::from_fn(rows, cols, |r, c| values[r * 5 + c]);
            let mut file = MatrixFile::new(kind, m);
            if with_ids {
                file = file.with_node_ids((0..rows).map(|i| format!("node-{i}")).collect());
            }
            let bin = file.to_binary().unwrap();
            prop_assert_eq!(&MatrixFile::decode(&bin).unwrap(), &file);
            let json = file.to_json().unwrap();
            prop_assert_eq!(&MatrixFile::decode(json.as_bytes()).unwrap(), &file);
        }
    }

    #[test]
    fn binary_layout_is_stable() {
        let file = MatrixFile::new(
            MatrixKind::Exp,
            DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
        );
        let bin = file.to_binary().unwrap();
        let mut expected = b"KPMX".to_vec();
        expected.extend_from_slice(&[1, 1, 0, 0]);
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&2u64.to_le_bytes());
        expected.extend_from_slice(&1.0f64.to_le_bytes());
        expected.extend_from_slice(&0.5f64.to_le_bytes());
        assert_eq!(bin, expected);
    }

    #[test]
    fn rejects_truncated_and_oversized() {
        let file = MatrixFile::new(MatrixKind::Pos, DMatrix::identity(3, 3));
        let bin = file.to_binary().unwrap();
        assert!(MatrixFile::from_binary(&bin[..bin.len() - 1]).is_err());
        let mut huge = bin.clone();
        huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(MatrixFile::from_binary(&huge).is_err());
        let mut trailing = bin;
        trailing.push(0);
        assert!(MatrixFile::from_binary(&trailing).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let file = MatrixFile::new(MatrixKind::Exp, DMatrix::from_element(1, 1, f64::NAN));
        assert!(file.to_binary().is_err());
        let mut bin = MatrixFile::new(MatrixKind::Exp, DMatrix::zeros(1, 1))
            .to_binary()
            .unwrap();
        bin[24..32].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(MatrixFile::from_binary(&bin).is_err());
    }

    #[test]
    fn json_shape_mismatch() {
        let text = r#"{"format":"knowprop-matrix","version":1,"kind":"exp","rows":2,"cols":2,"data":[1,2,3]}"#;
        assert!(MatrixFile::from_json(text).is_err());
    }
}
