//! Binary checkpoint container.
//!
//! Layout:
//!
//! ```text
//! b"GNNSEGCK"            8-byte magic
//! u64 LE                 header length in bytes
//! header                 UTF-8 JSON (CheckpointHeader)
//! f64 LE × N             parameter payload in registration order
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GNNSEGCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    /// Free-form architecture description (the model configuration).
    pub architecture: serde_json::Value,
    pub params: Vec<ParamShape>,
    pub step: u64,
}

impl CheckpointHeader {
    pub fn describe(store: &ParamStore, architecture: serde_json::Value, step: u64) -> Self {
        CheckpointHeader {
            format_version: FORMAT_VERSION,
            architecture,
            params: store
                .entries()
                .iter()
                .map(|e| ParamShape {
                    name: e.name.clone(),
                    rows: e.value.rows(),
                    cols: e.value.cols(),
                })
                .collect(),
            step,
        }
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.rows * p.cols).sum()
    }

    /// Check that `store` has exactly the declared parameter names and shapes.
    pub fn matches(&self, store: &ParamStore) -> Result<()> {
        if self.params.len() != store.len() {
            return Err(Error::validation(format!(
                "checkpoint declares {} parameters, model has {}",
                self.params.len(),
                store.len()
            )));
        }
        for (decl, entry) in self.params.iter().zip(store.entries()) {
            if decl.name != entry.name || (decl.rows, decl.cols) != entry.value.shape() {
                return Err(Error::validation(format!(
                    "checkpoint parameter {} {}x{} does not match model parameter {} {}x{}",
                    decl.name,
                    decl.rows,
                    decl.cols,
                    entry.name,
                    entry.value.rows(),
                    entry.value.cols()
                )));
            }
        }
        Ok(())
    }
}

pub fn encode(header: &CheckpointHeader, store: &ParamStore) -> Result<Vec<u8>> {
    header.matches(store)?;
    let json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * store.scalar_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in store.flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Split a checkpoint into its header and flat payload.
pub fn decode(bytes: &[u8]) -> Result<(CheckpointHeader, Vec<f64>)> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::UnsupportedFormat("not a checkpoint (bad magic)".into()));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() < len {
        return Err(Error::Parse("truncated checkpoint header".into()));
    }
    let header: CheckpointHeader = serde_json::from_slice(&body[..len])?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "checkpoint format version {}",
            header.format_version
        )));
    }
    let payload = &body[len..];
    let expected = header.scalar_count() * 8;
    if payload.len() != expected {
        return Err(Error::Parse(format!(
            "checkpoint payload has {} bytes, header declares {expected}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, values))
}

pub fn write(path: &Path, header: &CheckpointHeader, store: &ParamStore) -> Result<()> {
    let bytes = encode(header, store)?;
    crate::io::write_atomic(path, &bytes)
}

pub fn read(path: &Path) -> Result<(CheckpointHeader, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::matrix::Matrix;

    #[test]
    fn encode_decode() {
        let mut store = ParamStore::new();
        store.add("a", Matrix::from_vec(1, 2, vec![1.5, -0.25]).unwrap());
        store.add("b", Matrix::filled(2, 1, f64::MIN_POSITIVE));
        let header = CheckpointHeader::describe(&store, serde_json::json!({"k": 1}), 7);
        let bytes = encode(&header, &store).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        let (h, values) = decode(&bytes).unwrap();
        assert_eq!(h, header);
        let mut other = store.clone();
        other.zero_all();
        other.load_flat(&values).unwrap();
        assert_eq!(other, store);

        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"NOTACKPT00000000").is_err());
    }
}
